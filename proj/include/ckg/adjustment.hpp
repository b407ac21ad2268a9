#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <vector>

#include "ckg/dag.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/types.hpp"

namespace ckg {

namespace detail {

/// Bayes-ball reachability: nodes d-connected to any source given the
/// conditioning mask. `z` and `z_ancestral` (Z plus ancestors of Z) are masks.
inline std::vector<char> d_connected(const Dag& g, const std::vector<std::size_t>& sources,
                                     const std::vector<char>& z, const std::vector<char>& z_ancestral) {
    // state: node * 2 + dir; dir 0 = arrived from a child (moving up), 1 = from a parent
    std::vector<char> visited(g.size() * 2, 0);
    std::vector<char> reachable(g.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t s : sources) stack.push_back(s * 2);
    while (!stack.empty()) {
        std::size_t state = stack.back();
        stack.pop_back();
        if (visited[state]) continue;
        visited[state] = 1;
        const std::size_t v = state / 2;
        const bool from_child = (state % 2) == 0;
        if (!z[v]) reachable[v] = 1;
        if (from_child) {
            if (z[v]) continue;
            for (std::size_t p : g.parents(v)) stack.push_back(p * 2);
            for (std::size_t c : g.children(v)) stack.push_back(c * 2 + 1);
        } else {
            if (!z[v])
                for (std::size_t c : g.children(v)) stack.push_back(c * 2 + 1);
            if (z_ancestral[v])
                for (std::size_t p : g.parents(v)) stack.push_back(p * 2);
        }
    }
    return reachable;
}

inline std::vector<char> ancestral_closure(const Dag& g, const std::vector<char>& z) {
    std::vector<char> a = z;
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < g.size(); ++v)
        if (z[v]) stack.push_back(v);
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t p : g.parents(v))
            if (!a[p]) {
                a[p] = 1;
                stack.push_back(p);
            }
    }
    return a;
}

/// True iff every path between x and y is blocked by the mask z.
inline bool d_separated_single(const Dag& g, std::size_t x, std::size_t y, const std::vector<char>& z) {
    auto reach = d_connected(g, {x}, z, ancestral_closure(g, z));
    return !reach[y];
}

} // namespace detail

/// Standard d-separation of node sets X and Y given Z.
inline bool d_separated(const Dag& g, const NodeSet& X, const NodeSet& Y, const NodeSet& Z) {
    std::vector<char> z(g.size(), 0), seen(g.size(), 0);
    std::vector<std::size_t> xs, ys;
    auto mark = [&](const NodeSet& s, std::vector<std::size_t>* out) {
        for (const auto& n : s) {
            std::size_t i = g.index(n);
            if (seen[i]) fail(Errc::Overlap, "node '" + n.code + "' appears in more than one of X, Y, Z");
            seen[i] = 1;
            if (out) out->push_back(i);
            else z[i] = 1;
        }
    };
    mark(X, &xs);
    mark(Y, &ys);
    mark(Z, nullptr);
    auto reach = detail::d_connected(g, xs, z, detail::ancestral_closure(g, z));
    for (std::size_t y : ys)
        if (reach[y]) return false;
    return true;
}

/// Z satisfies the backdoor criterion for (t, y): no member descends from t,
/// and Z d-separates t from y once the edges out of t are removed.
inline bool satisfies_backdoor(const Dag& g, std::size_t t, std::size_t y, const std::vector<char>& z) {
    auto desc = g.descendants(t);
    for (std::size_t v = 0; v < g.size(); ++v)
        if (z[v] && (desc[v] || v == t || v == y)) return false;
    Dag cut = g;
    cut.remove_out_edges(t);
    return detail::d_separated_single(cut, t, y, z);
}

struct BackdoorStats {
    std::size_t checks = 0;
    bool truncated = false; ///< stopped by the check budget, not by `limit`
};

/// Backdoor adjustment sets for t → y in canonical order: cardinality
/// ascending, then lexicographic by node code. Stops after `limit` sets. If the
/// `max_checks` budget runs out the result is a prefix of the full ordered list.
inline std::vector<NodeSet> backdoor_sets(const Dag& g, const NodeId& t, const NodeId& y, std::size_t limit = 1000,
                                          BackdoorStats* stats = nullptr, std::size_t max_checks = 2'000'000) {
    const std::size_t ti = g.index(t), yi = g.index(y);
    if (!g.has_edge(ti, yi)) fail(Errc::Domain, "backdoor_sets expects an edge " + t.code + " -> " + y.code);
    const auto desc = g.descendants(ti);
    Dag cut = g;
    cut.remove_out_edges(ti);

    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < g.size(); ++v)
        if (v != ti && v != yi && !desc[v]) pool.push_back(v);

    std::vector<NodeSet> found;
    BackdoorStats local;
    std::vector<char> z(g.size(), 0);
    for (std::size_t k = 0; k <= pool.size() && found.size() < limit && !local.truncated; ++k) {
        std::vector<std::size_t> pick(k);
        for (std::size_t i = 0; i < k; ++i) pick[i] = i;
        while (true) {
            if (local.checks >= max_checks) {
                local.truncated = true;
                break;
            }
            std::fill(z.begin(), z.end(), 0);
            for (std::size_t i : pick) z[pool[i]] = 1;
            ++local.checks;
            if (detail::d_separated_single(cut, ti, yi, z)) {
                NodeSet s;
                for (std::size_t i : pick) s.insert(g.node(pool[i]));
                found.push_back(std::move(s));
                if (found.size() >= limit) break;
            }
            // next k-combination in lexicographic order
            std::size_t i = k;
            while (i > 0 && pick[i - 1] == pool.size() - k + i - 1) --i;
            if (i == 0) break;
            ++pick[i - 1];
            for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
        }
    }
    if (stats) *stats = local;
    return found;
}

/// Smallest set; the first listed among equals.
inline NodeSet choose_backdoor_set(const std::vector<NodeSet>& sets) {
    if (sets.empty()) fail(Errc::NoValidSet, "no valid backdoor adjustment set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < sets.size(); ++i)
        if (sets[i].size() < sets[best].size()) best = i;
    return sets[best];
}

/// Ancestors of t or y, minus t, y and every descendant of t.
inline NodeSet disjunctive_cause_set(const Dag& g, const NodeId& t, const NodeId& y) {
    const std::size_t ti = g.index(t), yi = g.index(y);
    auto at = g.ancestors(ti), ay = g.ancestors(yi), dt = g.descendants(ti);
    NodeSet out;
    for (std::size_t v = 0; v < g.size(); ++v)
        if ((at[v] || ay[v]) && !dt[v] && v != ti && v != yi) out.insert(g.node(v));
    return out;
}

/// Drops every member that has an IsA-ancestor also in the set.
inline NodeSet prune_hierarchy(const NodeSet& s, const CausalKnowledgeGraph& g) {
    NodeSet out;
    for (const auto& n : s) {
        bool redundant = false;
        if (g.contains(n)) {
            for (const auto& a : ancestors(g, n, Relation::IsA))
                if (s.count(a)) {
                    redundant = true;
                    break;
                }
        }
        if (!redundant) out.insert(n);
    }
    return out;
}

struct AdjustmentOptions {
    Criterion criterion = Criterion::DisjunctiveCause;
    std::size_t backdoor_limit = 1000;
    std::size_t max_checks = 2'000'000;
};

/// Adjustment set for one hypothesis: adds drug → outcome to a copy of the
/// causal DAG, applies the criterion with the drug as exposure, removes the
/// hypothesis nodes and prunes the IsA hierarchy. Throws NoValidSet or
/// CycleError (when the added edge closes a cycle).
inline AdjustmentSet find_adjustment(const CausalKnowledgeGraph& g, const Dag& causal, const Hypothesis& h,
                                     const AdjustmentOptions& opt = {}) {
    AdjustmentSet adj;
    adj.criterion = opt.criterion;
    if (opt.criterion == Criterion::None) return adj;

    Dag aug = causal;
    aug.add_edge(h.drug, h.outcome);
    if (auto cycle = aug.find_cycle())
        fail(Errc::Cycle, "adding " + h.drug.code + " -> " + h.outcome.code + " closes cycle " + aug.describe_cycle(*cycle));

    NodeSet raw;
    if (opt.criterion == Criterion::Backdoor) {
        BackdoorStats stats;
        auto sets = backdoor_sets(aug, h.drug, h.outcome, opt.backdoor_limit, &stats, opt.max_checks);
        raw = choose_backdoor_set(sets);
    } else {
        raw = disjunctive_cause_set(aug, h.drug, h.outcome);
    }
    raw.erase(h.indication);
    raw.erase(h.drug);
    raw.erase(h.outcome);
    adj.nodes = prune_hierarchy(raw, g);
    adj.pruned = adj.nodes.size() != raw.size();
    return adj;
}

} // namespace ckg
