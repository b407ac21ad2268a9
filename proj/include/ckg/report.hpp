#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "ckg/csv.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/hypothesis.hpp"
#include "ckg/mediation.hpp"
#include "ckg/types.hpp"

namespace ckg::report {

/// Fixed-width significant digits; NaN prints as NA.
inline std::string num(double v, int digits = 10) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::ofstream open_output(const std::string& path, const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write " + path);
    if (!header.empty()) out << header << '\n';
    return out;
}

inline void write_hypotheses(std::ostream& out, const std::vector<Hypothesis>& hyps) {
    out << "indication\tdrug\toutcome\tsource\n";
    for (const auto& h : hyps)
        out << h.indication.code << '\t' << h.drug.code << '\t' << h.outcome.code << '\t' << source_name(h.source) << '\n';
}

/// Reads hypotheses.tsv; every code must exist in `g` with the expected kind.
inline std::vector<Hypothesis> read_hypotheses(const std::string& path, const CausalKnowledgeGraph& g) {
    std::vector<Hypothesis> out;
    csv::read_table(path, '\t', {"indication", "drug", "outcome", "source"}, [&](std::size_t ln, const auto& f) {
        const std::string where = path + ":" + std::to_string(ln) + ": ";
        Hypothesis h{NodeId::disease(f[0]), NodeId::drug(f[1]), NodeId::disease(f[2]), HypothesisSource::CausalSet};
        try {
            h.source = parse_source(f[3]);
            for (const auto& n : {h.indication, h.drug, h.outcome}) g.slot(n);
        } catch (const Error& e) {
            fail(e.code(), where + e.what());
        }
        if (h.indication == h.outcome) fail(Errc::Parse, where + "indication equals outcome");
        out.push_back(h);
    });
    return out;
}

inline void write_comorbidity(std::ostream& out, const std::vector<ComorbidityPair>& pairs) {
    out << "d1\td2\trr\tp\tp_bh\tn_before\tn_after\n";
    for (const auto& p : pairs)
        out << p.d1.code << '\t' << p.d2.code << '\t' << num(p.rr) << '\t' << num(p.p_value) << '\t' << num(p.p_bh)
            << '\t' << p.n_before << '\t' << p.n_after << '\n';
}

struct AdjustmentRow {
    Hypothesis hypothesis;
    Criterion criterion = Criterion::None;
    NodeSet nodes;
    bool ok = true;
    std::string message;
};

inline std::string join_codes(const NodeSet& nodes) {
    std::string s;
    for (const auto& n : nodes) s += (s.empty() ? "" : ";") + n.code;
    return s;
}

inline void write_adjustments(std::ostream& out, const std::vector<AdjustmentRow>& rows) {
    out << "indication\tdrug\toutcome\tcriterion\tnodes\tstatus\n";
    for (const auto& r : rows)
        out << r.hypothesis.indication.code << '\t' << r.hypothesis.drug.code << '\t' << r.hypothesis.outcome.code
            << '\t' << criterion_name(r.criterion) << '\t' << join_codes(r.nodes) << '\t' << (r.ok ? "ok" : "na")
            << '\n';
}

inline std::string criterion_label(Criterion c, bool lasso) {
    return std::string(criterion_name(c)) + (lasso ? "+lasso" : "");
}

inline void write_mediation(std::ostream& out, const std::vector<MediationResult>& results) {
    out << "indication\tdrug\toutcome\tsource\tcriterion\tn\tn_covariates\tacme\tci_low\tci_high\tade\ttotal\t"
           "prop_mediated\tp\tp_bh\tinteraction\tstatus\tclass\n";
    for (const auto& r : results) {
        const auto& h = r.hypothesis;
        out << h.indication.code << '\t' << h.drug.code << '\t' << h.outcome.code << '\t' << source_name(h.source)
            << '\t' << criterion_label(r.criterion, r.lasso) << '\t' << r.n << '\t' << r.n_covariates << '\t'
            << num(r.acme) << '\t' << num(r.ci_low) << '\t' << num(r.ci_high) << '\t' << num(r.ade) << '\t'
            << num(r.total_effect) << '\t' << num(r.prop_mediated) << '\t' << num(r.p_value) << '\t' << num(r.p_bh)
            << '\t' << (r.interaction_included ? "true" : "false") << '\t' << status_name(r.status) << '\t'
            << class_name(r.effect_class) << '\n';
    }
}

/// The parts of mediation.tsv that evaluation needs.
struct MediationRow {
    std::string indication, drug, outcome, criterion, status, cls;
};

inline std::vector<MediationRow> read_mediation(const std::string& path) {
    const std::vector<std::string> header{"indication", "drug", "outcome", "source", "criterion", "n",
                                          "n_covariates", "acme", "ci_low", "ci_high", "ade", "total",
                                          "prop_mediated", "p", "p_bh", "interaction", "status", "class"};
    std::vector<MediationRow> rows;
    csv::read_table(path, '\t', header, [&](std::size_t, const auto& f) {
        rows.push_back({f[0], f[1], f[2], f[4], f[16], f[17]});
    });
    return rows;
}

} // namespace ckg::report
