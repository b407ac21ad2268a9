#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ckg/csv.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/types.hpp"

namespace ckg {

using DrugEffectPair = std::pair<std::string, std::string>; ///< (drug code, disease code)

struct ReferenceSet {
    std::set<DrugEffectPair> known_pairs;

    bool contains(const DrugEffectPair& p) const { return known_pairs.count(p) != 0; }
};

/// reference.tsv: header `drug<TAB>disease`; duplicates collapse.
inline ReferenceSet load_reference(const std::string& path) {
    ReferenceSet ref;
    csv::read_table(path, '\t', {"drug", "disease"}, [&](std::size_t, const std::vector<std::string>& f) {
        ref.known_pairs.emplace(f[0], f[1]);
    });
    return ref;
}

struct Prf {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
};

inline double f1_score(double precision, double recall) {
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    Prf r{tp, fp, fn};
    r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = f1_score(r.precision, r.recall);
    return r;
}

/// FN counts tested (drug, outcome) pairs that are in the reference but were
/// not significant-positive.
inline Prf prf(const std::set<DrugEffectPair>& significant_pos, const std::set<DrugEffectPair>& tested,
               const ReferenceSet& ref) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& p : significant_pos) (ref.contains(p) ? tp : fp)++;
    for (const auto& p : tested)
        if (ref.contains(p) && !significant_pos.count(p)) ++fn;
    return prf_from_counts(tp, fp, fn);
}

template <class Set>
double tanimoto(const Set& a, const Set& b) {
    if (a.empty() && b.empty()) fail(Errc::BothEmpty, "tanimoto of two empty sets");
    std::size_t shared = 0;
    for (const auto& x : a) shared += b.count(x);
    return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

struct SimilarityMatrix {
    std::vector<std::string> drugs;
    Eigen::MatrixXd scores;
    bool normalized = false;
};

/// Pairwise Tanimoto similarity; with `normalize`, z-scores over the
/// upper-triangle entries (population SD; SD 0 gives all zeros). The diagonal
/// is 1 before normalization and is left as is afterwards.
inline SimilarityMatrix similarity_matrix(const std::map<std::string, std::set<std::string>>& drug_to_effects,
                                          bool normalize) {
    SimilarityMatrix sim;
    std::vector<const std::set<std::string>*> sets;
    for (const auto& [drug, effects] : drug_to_effects)
        if (!effects.empty()) {
            sim.drugs.push_back(drug);
            sets.push_back(&effects);
        }
    if (sim.drugs.size() < 2) fail(Errc::Domain, "similarity needs at least 2 drugs with known effects");
    const auto n = static_cast<Eigen::Index>(sim.drugs.size());
    sim.scores = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            sim.scores(i, j) = sim.scores(j, i) = tanimoto(*sets[static_cast<std::size_t>(i)], *sets[static_cast<std::size_t>(j)]);
    if (!normalize) return sim;

    double sum = 0, count = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            sum += sim.scores(i, j);
            ++count;
        }
    const double mean = sum / count;
    double ss = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) ss += (sim.scores(i, j) - mean) * (sim.scores(i, j) - mean);
    const double sd = std::sqrt(ss / count);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double z = sd > 0 ? (sim.scores(i, j) - mean) / sd : 0.0;
            sim.scores(i, j) = sim.scores(j, i) = z;
        }
    sim.normalized = true;
    return sim;
}

/// Midranks (1-based) of the pooled values.
inline std::vector<double> midranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

/// U statistic of x against y: pairs with x > y plus half the ties.
inline double mann_whitney_statistic(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    auto r = midranks(pooled);
    double rx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) rx += r[i];
    const double nx = static_cast<double>(x.size());
    return rx - nx * (nx + 1) / 2.0;
}

/// P(score_pos > score_neg) + 0.5 P(tie).
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) fail(Errc::Domain, "scores and labels differ in length");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) fail(Errc::Domain, "labels must be 0 or 1");
        (labels[i] ? pos : neg).push_back(scores[i]);
    }
    if (pos.empty() || neg.empty()) fail(Errc::OneClass, "roc_auc needs both classes");
    return mann_whitney_statistic(pos, neg) / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct PairScores {
    std::vector<double> scores;
    std::vector<int> labels;
};

/// Every unordered drug pair in `sim`, labelled 1 when they share an indication.
inline PairScores shared_indication_pairs(const SimilarityMatrix& sim, const CausalKnowledgeGraph& g) {
    std::vector<NodeSet> targets;
    for (const auto& d : sim.drugs) targets.push_back(indications_of(g, NodeId::drug(d)));
    PairScores out;
    const std::size_t n = sim.drugs.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            bool shared = std::any_of(targets[i].begin(), targets[i].end(),
                                      [&](const NodeId& t) { return targets[j].count(t) != 0; });
            out.scores.push_back(sim.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out.labels.push_back(shared ? 1 : 0);
        }
    return out;
}

inline double shared_indication_eval(const SimilarityMatrix& sim, const CausalKnowledgeGraph& g) {
    auto pairs = shared_indication_pairs(sim, g);
    return roc_auc(pairs.scores, pairs.labels);
}

struct MannWhitney {
    double u = 0;
    double p_value = 1;
    bool exact = false;
};

/// Two-sided Mann–Whitney U test for x against y. Exact permutation
/// distribution (over all assignments of the pooled midranks) when
/// |x| + |y| <= 10, otherwise the tie-corrected normal approximation with
/// continuity correction.
inline MannWhitney mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) fail(Errc::EmptyInput, "mann_whitney_u needs two non-empty samples");
    MannWhitney r;
    r.u = mann_whitney_statistic(x, y);
    const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;
    const double mean_u = static_cast<double>(nx) * static_cast<double>(ny) / 2.0;

    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = midranks(pooled);

    if (n <= 10) {
        r.exact = true;
        const double observed = std::abs(r.u - mean_u);
        const double offset = static_cast<double>(nx) * static_cast<double>(nx + 1) / 2.0;
        std::size_t extreme = 0, total = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != nx) continue;
            double rs = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) rs += ranks[i];
            ++total;
            if (std::abs(rs - offset - mean_u) >= observed - 1e-9) ++extreme;
        }
        r.p_value = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
        return r;
    }

    std::map<double, std::size_t> ties;
    for (double v : pooled) ++ties[v];
    double tie_term = 0;
    for (const auto& [v, t] : ties) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double dn = static_cast<double>(n);
    const double var = static_cast<double>(nx) * static_cast<double>(ny) / 12.0 * ((dn + 1) - tie_term / (dn * (dn - 1)));
    if (!(var > 0)) {
        r.p_value = 1.0;
        return r;
    }
    const double dev = std::max(0.0, std::abs(r.u - mean_u) - 0.5);
    r.p_value = std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
    return r;
}

} // namespace ckg
