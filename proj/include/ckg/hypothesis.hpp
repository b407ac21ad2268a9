#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "ckg/cohort.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/multiple_testing.hpp"
#include "ckg/types.hpp"

namespace ckg {

struct RelativeRisk {
    double rr = 0.0;
    double p_value = 1.0;
};

/// Log of the hypergeometric pmf P[X = k], X ~ Hypergeometric(N, K successes, n draws).
inline double hypergeometric_log_pmf(std::size_t k, std::size_t N, std::size_t K, std::size_t n) {
    auto lchoose = [](double a, double b) { return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1); };
    return lchoose(static_cast<double>(K), static_cast<double>(k)) +
           lchoose(static_cast<double>(N - K), static_cast<double>(n - k)) -
           lchoose(static_cast<double>(N), static_cast<double>(n));
}

/// P[X >= k] for X ~ Hypergeometric(N, K, n).
inline double hypergeometric_upper_tail(std::size_t k, std::size_t N, std::size_t K, std::size_t n) {
    const std::size_t lo = K + n > N ? K + n - N : 0;
    const std::size_t hi = std::min(K, n);
    if (k <= lo) return 1.0;
    if (k > hi) return 0.0;
    // pmf recurrence: P(j+1)/P(j) = (K-j)(n-j) / ((j+1)(N-K-n+j+1))
    double term = std::exp(hypergeometric_log_pmf(k, N, K, n));
    double sum = 0.0;
    for (std::size_t j = k; j <= hi; ++j) {
        sum += term;
        if (j == hi) break;
        const double num = static_cast<double>(K - j) * static_cast<double>(n - j);
        const double den = static_cast<double>(j + 1) * static_cast<double>(N - K - n + j + 1);
        term *= num / den;
        if (term < sum * 1e-17 && num < den) break;
    }
    return std::min(sum, 1.0);
}

/// rr = C12 N / (P1 P2) with a one-sided exact (hypergeometric) enrichment p-value.
inline RelativeRisk relative_risk(std::size_t c12, std::size_t p1, std::size_t p2, std::size_t n) {
    if (p1 < 1 || p2 < 1 || c12 > std::min(p1, p2) || std::min(p1, p2) > n || std::max(p1, p2) > n)
        fail(Errc::Domain, "relative_risk needs 0 <= C12 <= min(P1,P2) <= N and P1,P2 >= 1");
    RelativeRisk r;
    r.rr = static_cast<double>(c12) * static_cast<double>(n) / (static_cast<double>(p1) * static_cast<double>(p2));
    r.p_value = hypergeometric_upper_tail(c12, n, p1, p2);
    return r;
}

struct ComorbidityPair {
    NodeId d1; ///< earlier disease when oriented
    NodeId d2;
    double rr = 0.0;
    double p_value = 1.0;
    double p_bh = 1.0;
    bool oriented = false;
    std::size_t n_before = 0; ///< persons with d1 first
    std::size_t n_after = 0;  ///< persons with d2 first
    std::size_t both = 0;
};

/// Scores every unordered disease pair sharing at least one person. Pairs
/// linked through IsA are skipped (their co-occurrence is implied by the
/// hierarchy). Orientation counts use IsA-closed first-diagnosis dates;
/// same-day pairs do not vote.
inline std::vector<ComorbidityPair> score_comorbidity_pairs(const Cohort& c, const CausalKnowledgeGraph& g) {
    std::vector<NodeId> diseases;
    for (const auto& n : g.nodes())
        if (n.kind == NodeKind::Disease) diseases.push_back(n);
    std::map<std::string, std::vector<std::size_t>> code_to_nodes;
    for (std::size_t i = 0; i < diseases.size(); ++i)
        for (const auto& code : member_codes(g, diseases[i])) code_to_nodes[code].push_back(i);

    struct Tally {
        std::size_t both = 0, before = 0, after = 0;
    };
    std::map<std::pair<std::size_t, std::size_t>, Tally> tallies;
    std::vector<std::size_t> prevalence(diseases.size(), 0);
    for (const auto& p : c.persons()) {
        std::map<std::size_t, Date> first;
        for (const auto& d : p.diagnoses) {
            auto it = code_to_nodes.find(d.code);
            if (it == code_to_nodes.end()) continue;
            for (std::size_t node : it->second) {
                auto [pos, inserted] = first.emplace(node, d.date);
                if (!inserted && d.date < pos->second) pos->second = d.date;
            }
        }
        for (auto a = first.begin(); a != first.end(); ++a) {
            ++prevalence[a->first];
            for (auto b = std::next(a); b != first.end(); ++b) {
                auto& t = tallies[{a->first, b->first}];
                ++t.both;
                if (a->second < b->second) ++t.before;
                else if (b->second < a->second) ++t.after;
            }
        }
    }

    std::vector<ComorbidityPair> out;
    for (const auto& [key, t] : tallies) {
        const auto& a = diseases[key.first];
        const auto& b = diseases[key.second];
        auto up_a = ancestors(g, a, Relation::IsA);
        auto up_b = ancestors(g, b, Relation::IsA);
        if (up_a.count(b) || up_b.count(a)) continue;
        auto rr = relative_risk(t.both, prevalence[key.first], prevalence[key.second], c.size());
        ComorbidityPair cp{a, b, rr.rr, rr.p_value, 1.0, false, t.before, t.after, t.both};
        if (t.after > t.before) {
            std::swap(cp.d1, cp.d2);
            std::swap(cp.n_before, cp.n_after);
        }
        cp.oriented = cp.n_before > cp.n_after;
        out.push_back(std::move(cp));
    }
    return out;
}

/// Significant (BH across all scored pairs), enriched (rr > 1), oriented pairs,
/// ordered by (d1, d2).
inline std::vector<ComorbidityPair> mine_comorbidity_pairs(const Cohort& c, const CausalKnowledgeGraph& g,
                                                           double alpha = 0.05) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::Domain, "alpha must lie in (0, 1)");
    auto scored = score_comorbidity_pairs(c, g);
    std::vector<double> p;
    for (const auto& s : scored) p.push_back(s.p_value);
    auto bh = bh_correct(p, alpha);
    std::vector<ComorbidityPair> kept;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        scored[i].p_bh = bh.p_adjusted[i];
        if (scored[i].p_bh <= alpha && scored[i].rr > 1.0 && scored[i].oriented) kept.push_back(scored[i]);
    }
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return std::tie(a.d1, a.d2) < std::tie(b.d1, b.d2); });
    return kept;
}

/// Directed disease pairs asserted by CausesOnset edges.
inline std::vector<std::pair<NodeId, NodeId>> causal_pairs(const CausalKnowledgeGraph& g) {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& e : g.edges_of(Relation::CausesOnset)) out.emplace_back(e.src, e.dst);
    return out;
}

struct GenerationCounts {
    std::size_t candidates = 0;
    std::size_t dropped_shared_indication = 0;
    std::size_t dropped_shared_side_effect = 0;
};

/// (x, drug, y) for each drug indicated for x, minus drugs also indicated for y
/// and drugs listing both x and y as side effects. Sorted, de-duplicated.
inline std::vector<Hypothesis> generate_hypotheses(const CausalKnowledgeGraph& g,
                                                   const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                                   HypothesisSource source, GenerationCounts* counts = nullptr) {
    GenerationCounts local;
    std::vector<Hypothesis> out;
    for (const auto& [x, y] : pairs) {
        g.slot(x);
        g.slot(y);
        if (x == y) continue;
        for (const auto& drug : indicated_drugs(g, x)) {
            ++local.candidates;
            if (g.has_edge(drug, Relation::IndicatedFor, y)) {
                ++local.dropped_shared_indication;
                continue;
            }
            if (g.has_edge(drug, Relation::HasSideEffect, x) && g.has_edge(drug, Relation::HasSideEffect, y)) {
                ++local.dropped_shared_side_effect;
                continue;
            }
            out.push_back(Hypothesis{x, drug, y, source});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (counts) *counts = local;
    return out;
}

/// Keeps hypotheses whose three nodes are populated and jointly observed in at
/// least one person.
inline std::vector<Hypothesis> availability_filter(const Cohort& c, const CausalKnowledgeGraph& g,
                                                   const std::vector<Hypothesis>& hyps) {
    std::map<NodeId, PersonSet> cache;
    auto ext = [&](const NodeId& n) -> const PersonSet& {
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, extension(c, g, n)).first;
        return it->second;
    };
    std::vector<Hypothesis> out;
    for (const auto& h : hyps) {
        const auto& a = ext(h.indication);
        const auto& b = ext(h.drug);
        const auto& d = ext(h.outcome);
        if (a.empty() || b.empty() || d.empty()) continue;
        PersonSet ab, abd;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(ab));
        std::set_intersection(ab.begin(), ab.end(), d.begin(), d.end(), std::back_inserter(abd));
        if (!abd.empty()) out.push_back(h);
    }
    return out;
}

} // namespace ckg
