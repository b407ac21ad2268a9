#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ckg/cohort.hpp"
#include "ckg/graph.hpp"
#include "ckg/types.hpp"

namespace ckg {

struct ExclusionCounts {
    std::size_t no_records = 0;
    std::size_t no_follow_up = 0;
    std::size_t outcome_first = 0;
    std::size_t drug_only_before = 0;
};

/// Per-hypothesis analysis table: binary T, M, Y plus a covariate matrix whose
/// columns are named in `covariate_names`.
struct AnalysisSample {
    Hypothesis hypothesis;
    std::vector<std::string> person_ids;
    std::vector<Date> index_dates;
    Eigen::VectorXd t;
    Eigen::VectorXd m;
    Eigen::VectorXd y;
    Eigen::MatrixXd covariates;
    std::vector<std::string> covariate_names;
    ExclusionCounts excluded;

    std::size_t n() const { return static_cast<std::size_t>(t.size()); }

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t j = 0; j < covariate_names.size(); ++j)
            if (covariate_names[j] == name) return j;
        return std::nullopt;
    }

    /// Covariate sub-matrix in the order given; unknown names throw Domain.
    Eigen::MatrixXd columns(const std::vector<std::string>& names) const {
        Eigen::MatrixXd out(covariates.rows(), static_cast<Eigen::Index>(names.size()));
        for (std::size_t k = 0; k < names.size(); ++k) {
            auto j = column(names[k]);
            if (!j) fail(Errc::Domain, "no covariate named '" + names[k] + "'");
            out.col(static_cast<Eigen::Index>(k)) = covariates.col(static_cast<Eigen::Index>(*j));
        }
        return out;
    }
};

inline const char* kComorbidityCount = "n_comorbidities";
inline const char* kDrugCount = "n_drugs";
inline std::string adjustment_column(const NodeId& n) { return "adj:" + n.code; }

namespace detail {

struct RowDraft {
    std::size_t person = 0;
    Date index;
    double t = 0, m = 0, y = 0;
    double comorbidities = 0, drugs = 0;
    std::vector<double> indicators;
};

} // namespace detail

/// Applies the temporal exclusions and builds the covariate table.
///
/// Exclusions, in order: no dated records; no record after the index date; the
/// first outcome diagnosis precedes every present first indication and first
/// exposure; among persons with indication and drug, every exposure ends before
/// the first indication.
///
/// Covariates are the baseline variables (mean-imputed, with a `<name>_missing`
/// column when any value is absent), the comorbidity and drug counts, and one
/// `adj:<code>` onset indicator per adjustment node. Pre-index events are those
/// strictly before the index date; for persons anchored on their earliest
/// record, events on the index date itself also count.
///
/// Throws EmptySample when nobody survives and, unless `require_variation` is
/// false, DegenerateSample when T, M or Y is constant.
inline AnalysisSample select_sample(const Cohort& c, const CausalKnowledgeGraph& g, const Hypothesis& h,
                                    const AdjustmentSet& adj, bool require_variation = true) {
    const auto ind_codes = member_codes(g, h.indication);
    const auto drug_codes = member_codes(g, h.drug);
    const auto out_codes = member_codes(g, h.outcome);
    std::vector<std::pair<std::set<std::string>, NodeKind>> adj_codes;
    for (const auto& n : adj.nodes) adj_codes.emplace_back(member_codes(g, n), n.kind);

    AnalysisSample s;
    s.hypothesis = h;
    std::vector<detail::RowDraft> rows;

    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c.person(i);
        auto earliest = p.earliest_record();
        if (!earliest) {
            ++s.excluded.no_records;
            continue;
        }
        auto first_ind = first_onset(p, ind_codes, NodeKind::Disease);
        auto first_drug = first_onset(p, drug_codes, NodeKind::Drug);
        auto first_out = first_onset(p, out_codes, NodeKind::Disease);
        IndexDate idx = first_ind    ? IndexDate{*first_ind, IndexAnchor::Indication}
                        : first_drug ? IndexDate{*first_drug, IndexAnchor::Drug}
                                     : IndexDate{*earliest, IndexAnchor::EarliestRecord};

        if (!p.has_record_after(idx.date)) {
            ++s.excluded.no_follow_up;
            continue;
        }
        if (first_out && (first_ind || first_drug)) {
            bool before_ind = !first_ind || *first_out < *first_ind;
            bool before_drug = !first_drug || *first_out < *first_drug;
            if (before_ind && before_drug) {
                ++s.excluded.outcome_first;
                continue;
            }
        }
        if (first_ind && first_drug) {
            bool any_after = false;
            for (const auto& e : p.exposures)
                if (drug_codes.count(e.drug) && !(e.last() < *first_ind)) any_after = true;
            if (!any_after) {
                ++s.excluded.drug_only_before;
                continue;
            }
        }

        detail::RowDraft r;
        r.person = i;
        r.index = idx.date;
        r.t = first_ind ? 1.0 : 0.0;
        std::optional<Date> qualifying;
        for (const auto& e : p.exposures) {
            if (!drug_codes.count(e.drug)) continue;
            if (first_ind && e.start < idx.date) continue;
            if (!qualifying || e.start < *qualifying) qualifying = e.start;
        }
        r.m = qualifying ? 1.0 : 0.0;
        Date anchor = qualifying && *qualifying > idx.date ? *qualifying : idx.date;
        for (const auto& d : p.diagnoses)
            if (out_codes.count(d.code) && d.date > anchor) r.y = 1.0;

        const bool inclusive = idx.anchor == IndexAnchor::EarliestRecord;
        auto pre_index = [&](Date d) { return inclusive ? d <= idx.date : d < idx.date; };
        std::set<std::string> prior_dx, prior_rx;
        for (const auto& d : p.diagnoses)
            if (pre_index(d.date)) prior_dx.insert(d.code);
        for (const auto& e : p.exposures)
            if (pre_index(e.start)) prior_rx.insert(e.drug);
        r.comorbidities = static_cast<double>(prior_dx.size());
        r.drugs = static_cast<double>(prior_rx.size());
        for (const auto& [codes, kind] : adj_codes) {
            auto onset = first_onset(p, codes, kind);
            r.indicators.push_back(onset && pre_index(*onset) ? 1.0 : 0.0);
        }
        rows.push_back(std::move(r));
    }

    if (rows.empty()) fail(Errc::EmptySample, "no persons survive sample selection for " + h.label());

    std::set<std::string> baseline_names;
    for (const auto& r : rows)
        for (const auto& [name, v] : c.person(r.person).baseline) baseline_names.insert(name);

    const auto n = static_cast<Eigen::Index>(rows.size());
    std::vector<std::vector<double>> cols;
    for (const auto& name : baseline_names) {
        std::vector<double> col(rows.size()), missing(rows.size(), 0.0);
        double sum = 0;
        std::size_t present = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& b = c.person(rows[k].person).baseline;
            auto it = b.find(name);
            if (it == b.end()) {
                missing[k] = 1.0;
            } else {
                col[k] = it->second;
                sum += it->second;
                ++present;
            }
        }
        double mean = sum / static_cast<double>(present);
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (missing[k] != 0.0) col[k] = mean;
        cols.push_back(std::move(col));
        s.covariate_names.push_back(name);
        if (present < rows.size()) {
            cols.push_back(std::move(missing));
            s.covariate_names.push_back(name + "_missing");
        }
    }
    {
        std::vector<double> cm, dr;
        for (const auto& r : rows) {
            cm.push_back(r.comorbidities);
            dr.push_back(r.drugs);
        }
        cols.push_back(std::move(cm));
        s.covariate_names.emplace_back(kComorbidityCount);
        cols.push_back(std::move(dr));
        s.covariate_names.emplace_back(kDrugCount);
    }
    std::size_t a = 0;
    for (const auto& node : adj.nodes) {
        std::vector<double> col;
        for (const auto& r : rows) col.push_back(r.indicators[a]);
        cols.push_back(std::move(col));
        s.covariate_names.push_back(adjustment_column(node));
        ++a;
    }

    s.t.resize(n);
    s.m.resize(n);
    s.y.resize(n);
    s.covariates.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        s.person_ids.push_back(c.person(r.person).id);
        s.index_dates.push_back(r.index);
        s.t[k] = r.t;
        s.m[k] = r.m;
        s.y[k] = r.y;
        for (std::size_t j = 0; j < cols.size(); ++j)
            s.covariates(k, static_cast<Eigen::Index>(j)) = cols[j][static_cast<std::size_t>(k)];
    }

    auto constant = [](const Eigen::VectorXd& v) { return v.minCoeff() == v.maxCoeff(); };
    if (require_variation && (constant(s.t) || constant(s.m) || constant(s.y))) {
        std::string which = constant(s.t) ? "T" : constant(s.m) ? "M" : "Y";
        fail(Errc::DegenerateSample, which + " is constant in the sample for " + h.label());
    }
    return s;
}

} // namespace ckg
