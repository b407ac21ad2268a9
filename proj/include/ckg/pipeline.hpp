#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ckg/adjustment.hpp"
#include "ckg/cohort.hpp"
#include "ckg/config.hpp"
#include "ckg/error.hpp"
#include "ckg/evaluation.hpp"
#include "ckg/graph.hpp"
#include "ckg/hypothesis.hpp"
#include "ckg/mediation.hpp"
#include "ckg/report.hpp"
#include "ckg/synth.hpp"

namespace ckg::pipeline {

namespace fs = std::filesystem;

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

inline void require(const std::string& value, const std::string& key, const std::string& command) {
    if (value.empty()) fail(Errc::Config, command + " needs " + key);
}

inline CausalKnowledgeGraph load_graph_for(const RunConfig& cfg, const std::string& command) {
    require(cfg.graph, "graph", command);
    return load_graph(cfg.graph);
}

inline Cohort load_cohort_for(const RunConfig& cfg, const std::string& command) {
    require(cfg.diagnoses, "diagnoses", command);
    require(cfg.exposures, "exposures", command);
    require(cfg.baseline, "baseline", command);
    return load_cohort(cfg.diagnoses, cfg.exposures, cfg.baseline);
}

inline void cmd_gen_hypotheses(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (cfg.source == HypothesisSource::ComorbiditySet && !cfg.has_cohort())
        fail(Errc::Config, "source=comorbidity needs the cohort files (diagnoses, exposures, baseline)");
    auto g = load_graph_for(cfg, "gen-hypotheses");
    std::optional<Cohort> cohort;
    if (cfg.has_cohort()) cohort = load_cohort_for(cfg, "gen-hypotheses");

    std::vector<std::pair<NodeId, NodeId>> pairs;
    if (cfg.source == HypothesisSource::CausalSet) {
        pairs = causal_pairs(g);
    } else {
        auto mined = mine_comorbidity_pairs(*cohort, g, cfg.alpha);
        auto out = report::open_output(out_path(cfg, "comorbidity.tsv"), cfg.header());
        report::write_comorbidity(out, mined);
        for (const auto& p : mined) pairs.emplace_back(p.d1, p.d2);
    }
    GenerationCounts counts;
    auto hyps = generate_hypotheses(g, pairs, cfg.source, &counts);
    const std::size_t generated = hyps.size();
    if (cohort) hyps = availability_filter(*cohort, g, hyps);

    auto out = report::open_output(out_path(cfg, "hypotheses.tsv"), cfg.header());
    report::write_hypotheses(out, hyps);
    log << "pairs=" << pairs.size() << " candidates=" << counts.candidates
        << " dropped_shared_indication=" << counts.dropped_shared_indication
        << " dropped_shared_side_effect=" << counts.dropped_shared_side_effect << " generated=" << generated
        << " available=" << (cohort ? std::to_string(hyps.size()) : std::string("unchecked")) << '\n';
}

inline void cmd_adjust(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    auto g = load_graph_for(cfg, "adjust");
    require(cfg.hypotheses, "hypotheses", "adjust");
    auto hyps = report::read_hypotheses(cfg.hypotheses, g);
    const Dag causal = g.causal_dag();
    std::vector<report::AdjustmentRow> rows;
    std::size_t failed = 0;
    for (Criterion c : cfg.criteria)
        for (const auto& h : hyps) {
            report::AdjustmentRow row{h, c, {}, true, {}};
            try {
                AdjustmentOptions opt{c, cfg.backdoor_limit};
                row.nodes = find_adjustment(g, causal, h, opt).nodes;
            } catch (const Error& e) {
                row.ok = false;
                row.message = e.what();
                ++failed;
                log << h.label() << ": " << e.what() << '\n';
            }
            rows.push_back(std::move(row));
        }
    auto out = report::open_output(out_path(cfg, "adjustments.tsv"), cfg.header());
    report::write_adjustments(out, rows);
    log << "adjusted=" << rows.size() - failed << " na=" << failed << '\n';
}

struct ClassCounts {
    std::size_t total = 0, na = 0, insig = 0, pos = 0, neg = 0;
};

inline ClassCounts count_classes(const std::vector<MediationResult>& results) {
    ClassCounts c;
    for (const auto& r : results) {
        ++c.total;
        switch (r.effect_class) {
        case EffectClass::Na: ++c.na; break;
        case EffectClass::Insig: ++c.insig; break;
        case EffectClass::Pos: ++c.pos; break;
        case EffectClass::Neg: ++c.neg; break;
        }
    }
    return c;
}

/// Significant-positive and tested (drug, outcome) pairs of one batch.
inline Prf score_batch(const std::vector<MediationResult>& results, const ReferenceSet& ref) {
    std::set<DrugEffectPair> pos, tested;
    for (const auto& r : results) {
        DrugEffectPair p{r.hypothesis.drug.code, r.hypothesis.outcome.code};
        if (r.status == MediationStatus::Ok) tested.insert(p);
        if (r.effect_class == EffectClass::Pos) pos.insert(p);
    }
    return prf(pos, tested, ref);
}

inline void cmd_mediate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    auto g = load_graph_for(cfg, "mediate");
    auto cohort = load_cohort_for(cfg, "mediate");
    require(cfg.hypotheses, "hypotheses", "mediate");
    auto hyps = report::read_hypotheses(cfg.hypotheses, g);
    std::optional<ReferenceSet> ref;
    if (!cfg.reference.empty()) ref = load_reference(cfg.reference);

    std::set<std::string> sources;
    for (const auto& h : hyps) sources.insert(std::string(source_name(h.source)));
    std::string source_label;
    for (const auto& s : sources) source_label += (source_label.empty() ? "" : ",") + s;
    if (source_label.empty()) source_label = std::string(source_name(cfg.source));

    std::vector<MediationResult> all;
    std::ostringstream summary;
    summary << "source\tcriterion\thypotheses\tna\tinsig\tpos\tneg\tprecision\trecall\tf1\n";
    for (Criterion c : cfg.criteria) {
        BatchConfig bc;
        bc.criterion = c;
        bc.lasso = cfg.lasso;
        bc.alpha = cfg.alpha;
        bc.nsim = cfg.nsim;
        bc.backdoor_limit = cfg.backdoor_limit;
        bc.folds = cfg.folds;
        bc.seed = cfg.seed;
        bc.threads = cfg.threads;
        auto results = run_mediation_batch(hyps, cohort, g, bc);
        auto counts = count_classes(results);
        summary << source_label << '\t' << report::criterion_label(c, cfg.lasso) << '\t' << counts.total << '\t'
                << counts.na << '\t' << counts.insig << '\t' << counts.pos << '\t' << counts.neg;
        if (ref) {
            auto s = score_batch(results, *ref);
            summary << '\t' << report::num(s.precision, 6) << '\t' << report::num(s.recall, 6) << '\t'
                    << report::num(s.f1, 6);
        } else {
            summary << "\tNA\tNA\tNA";
        }
        summary << '\n';
        log << report::criterion_label(c, cfg.lasso) << ": hypotheses=" << counts.total << " na=" << counts.na
            << " insig=" << counts.insig << " pos=" << counts.pos << " neg=" << counts.neg << '\n';
        all.insert(all.end(), results.begin(), results.end());
    }
    auto out = report::open_output(out_path(cfg, "mediation.tsv"), cfg.header());
    report::write_mediation(out, all);
    auto sum = report::open_output(out_path(cfg, "summary.tsv"), cfg.header());
    sum << summary.str();
}

inline void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
    std::ostringstream metrics;
    if (cfg.precision || cfg.recall) {
        if (!cfg.precision || !cfg.recall) fail(Errc::Config, "evaluate needs both precision and recall");
        const double p = *cfg.precision, r = *cfg.recall;
        if (!(p >= 0 && p <= 1 && r >= 0 && r <= 1)) fail(Errc::Config, "precision and recall must lie in [0, 1]");
        metrics << "precision=" << report::num(p, 6) << "\nrecall=" << report::num(r, 6)
                << "\nf1=" << report::num(f1_score(p, r), 6) << '\n';
    } else {
        require(cfg.mediation, "mediation", "evaluate");
        require(cfg.reference, "reference", "evaluate");
        auto rows = report::read_mediation(cfg.mediation);
        auto ref = load_reference(cfg.reference);
        std::map<std::string, std::pair<std::set<DrugEffectPair>, std::set<DrugEffectPair>>> by_label;
        for (const auto& r : rows) {
            auto& [pos, tested] = by_label[r.criterion];
            DrugEffectPair p{r.drug, r.outcome};
            if (r.status == "ok") tested.insert(p);
            if (r.cls == "pos") pos.insert(p);
        }
        for (const auto& [label, sets] : by_label) {
            auto s = prf(sets.first, sets.second, ref);
            const std::string prefix = by_label.size() > 1 ? label + "." : "";
            metrics << prefix << "tp=" << s.tp << '\n'
                    << prefix << "fp=" << s.fp << '\n'
                    << prefix << "fn=" << s.fn << '\n'
                    << prefix << "precision=" << report::num(s.precision, 6) << '\n'
                    << prefix << "recall=" << report::num(s.recall, 6) << '\n'
                    << prefix << "f1=" << report::num(s.f1, 6) << '\n';
        }
    }
    auto out = report::open_output(out_path(cfg, "metrics.txt"), cfg.header());
    out << metrics.str();
    log << metrics.str();
}

struct SimilarityReport {
    std::optional<double> auc_known, auc_discovered, auc_union, mwu_p;
    std::optional<SimilarityMatrix> union_matrix;
};

inline SimilarityReport similarity_report(const CausalKnowledgeGraph& g, const std::set<DrugEffectPair>& discovered) {
    std::map<std::string, std::set<std::string>> known, found, both;
    for (const auto& e : g.edges_of(Relation::HasSideEffect)) {
        known[e.src.code].insert(e.dst.code);
        both[e.src.code].insert(e.dst.code);
    }
    for (const auto& [drug, effect] : discovered) {
        found[drug].insert(effect);
        both[drug].insert(effect);
    }
    SimilarityReport rep;
    auto auc = [&](const std::map<std::string, std::set<std::string>>& effects) -> std::optional<double> {
        try {
            return shared_indication_eval(similarity_matrix(effects, true), g);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    rep.auc_known = auc(known);
    rep.auc_discovered = auc(found);
    rep.auc_union = auc(both);
    try {
        rep.union_matrix = similarity_matrix(both, true);
        auto pairs = shared_indication_pairs(*rep.union_matrix, g);
        std::vector<double> shared, other;
        for (std::size_t i = 0; i < pairs.scores.size(); ++i) (pairs.labels[i] ? shared : other).push_back(pairs.scores[i]);
        rep.mwu_p = mann_whitney_u(shared, other).p_value;
    } catch (const Error&) {
    }
    return rep;
}

inline void cmd_similarity(const RunConfig& cfg, std::ostream& log) {
    auto g = load_graph_for(cfg, "similarity");
    std::set<DrugEffectPair> discovered;
    if (!cfg.mediation.empty())
        for (const auto& r : report::read_mediation(cfg.mediation))
            if (r.cls == "pos") discovered.emplace(r.drug, r.outcome);
    auto rep = similarity_report(g, discovered);
    auto opt = [](const std::optional<double>& v) { return v ? report::num(*v, 6) : std::string("NA"); };
    std::ostringstream metrics;
    metrics << "auc_known=" << opt(rep.auc_known) << "\nauc_discovered=" << opt(rep.auc_discovered)
            << "\nauc_union=" << opt(rep.auc_union) << "\nmwu_p=" << opt(rep.mwu_p) << '\n';
    auto out = report::open_output(out_path(cfg, "similarity_metrics.txt"), cfg.header());
    out << metrics.str();
    auto mat = report::open_output(out_path(cfg, "similarity.tsv"), cfg.header());
    mat << "drug_a\tdrug_b\tz\n";
    if (rep.union_matrix) {
        const auto& m = *rep.union_matrix;
        for (std::size_t i = 0; i < m.drugs.size(); ++i)
            for (std::size_t j = i + 1; j < m.drugs.size(); ++j)
                mat << m.drugs[i] << '\t' << m.drugs[j] << '\t'
                    << report::num(m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    }
    log << metrics.str();
}

inline void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    require(cfg.spec, "spec", "simulate");
    auto spec = synth::load_spec(cfg.spec);
    fs::create_directories(cfg.out_dir);
    auto data = synth::generate_cohort(spec, cfg.n, cfg.seed, cfg.out_dir, cfg.header().substr(2));
    log << "persons=" << data.cohort.size() << " edges=" << data.graph.edges().size() << '\n';
    if (cfg.oracle_draws > 0) {
        auto truth = synth::true_acme(spec, cfg.oracle_draws, cfg.seed);
        auto out = report::open_output(out_path(cfg, "oracle.txt"), cfg.header());
        out << "true_acme=" << report::num(truth.value, 12) << "\nmc_se=" << report::num(truth.mc_se, 6)
            << "\ndraws=" << truth.draws << '\n';
        log << "true_acme=" << report::num(truth.value, 12) << " mc_se=" << report::num(truth.mc_se, 6) << '\n';
    }
}

inline void cmd_check_graph(const RunConfig& cfg, std::ostream& log) {
    require(cfg.graph, "graph", "check-graph");
    LoadSummary summary;
    auto g = load_graph(cfg.graph, &summary);
    std::size_t diseases = 0, drugs = 0;
    for (const auto& n : g.nodes()) (n.kind == NodeKind::Disease ? diseases : drugs)++;
    log << "rows=" << summary.rows << " duplicates=" << summary.duplicates << " diseases=" << diseases
        << " drugs=" << drugs;
    for (Relation r : kAllRelations) log << ' ' << relation_name(r) << '=' << g.edges_of(r).size();
    log << " acyclic=true\n";
}

/// Maps exceptions to exit codes: 2 for input and validation errors, 3 for
/// anything else.
template <class Fn>
int run_command(Fn&& fn, std::ostream& err) {
    try {
        fn();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace ckg::pipeline
