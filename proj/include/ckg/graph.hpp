#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ckg/csv.hpp"
#include "ckg/dag.hpp"
#include "ckg/error.hpp"
#include "ckg/node.hpp"

namespace ckg {

enum class Relation { IsA, CausesOnset, IndicatedFor, HasSideEffect };

inline constexpr std::array<Relation, 4> kAllRelations{Relation::IsA, Relation::CausesOnset,
                                                       Relation::IndicatedFor, Relation::HasSideEffect};

inline std::string_view relation_name(Relation r) {
    switch (r) {
    case Relation::IsA: return "is_a";
    case Relation::CausesOnset: return "causes_onset";
    case Relation::IndicatedFor: return "indicated_for";
    case Relation::HasSideEffect: return "has_side_effect";
    }
    return "?";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
    for (Relation r : kAllRelations)
        if (relation_name(r) == s) return r;
    return std::nullopt;
}

/// Required (src kind, dst kind) per relation.
inline std::pair<NodeKind, NodeKind> relation_signature(Relation r) {
    switch (r) {
    case Relation::IsA:
    case Relation::CausesOnset: return {NodeKind::Disease, NodeKind::Disease};
    case Relation::IndicatedFor:
    case Relation::HasSideEffect: return {NodeKind::Drug, NodeKind::Disease};
    }
    return {NodeKind::Disease, NodeKind::Disease};
}

struct Edge {
    NodeId src;
    Relation rel = Relation::IsA;
    NodeId dst;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge& a, const Edge& b) {
        if (auto c = a.src <=> b.src; c != 0) return c;
        if (auto c = a.rel <=> b.rel; c != 0) return c;
        return a.dst <=> b.dst;
    }
};

/// Relations read causally: CausesOnset as asserted, IndicatedFor inverted
/// (a disease leads to prescription of the drug).
struct CausalRelation {
    Relation rel;
    bool inverted;
};
inline constexpr std::array<CausalRelation, 2> kCausalRelations{
    CausalRelation{Relation::CausesOnset, false}, CausalRelation{Relation::IndicatedFor, true}};

struct LoadSummary {
    std::size_t rows = 0;
    std::size_t duplicates = 0;
    std::map<Relation, std::size_t> edges_by_relation;
};

/// Knowledge graph with typed nodes and the four drug/disease relations.
/// Immutable once built; all queries are const.
class CausalKnowledgeGraph {
public:
    CausalKnowledgeGraph() = default;

    /// Validates and de-duplicates. Throws KindMismatch, CycleError.
    static CausalKnowledgeGraph from_edges(std::vector<Edge> edges, std::vector<NodeId> extra_nodes = {},
                                           LoadSummary* summary = nullptr) {
        CausalKnowledgeGraph g;
        std::size_t before = edges.size();
        for (const auto& e : edges) {
            auto [sk, dk] = relation_signature(e.rel);
            if (e.src.kind != sk || e.dst.kind != dk) {
                fail(Errc::KindMismatch, std::string(relation_name(e.rel)) + " edge " + e.src.code + " -> " +
                                             e.dst.code + " requires " + std::string(kind_name(sk)) + " -> " +
                                             std::string(kind_name(dk)));
            }
            if (e.src == e.dst) fail(Errc::Cycle, "self-loop " + e.src.code + " -> " + e.src.code);
            if (e.src.code.empty() || e.dst.code.empty()) fail(Errc::Parse, "empty node code");
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        std::vector<NodeId> nodes = std::move(extra_nodes);
        for (const auto& e : edges) {
            nodes.push_back(e.src);
            nodes.push_back(e.dst);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (nodes[i].code == nodes[i - 1].code)
                fail(Errc::KindMismatch, "code '" + nodes[i].code + "' used as both disease and drug");
        }
        g.nodes_ = std::move(nodes);
        for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i].code, i);
        for (auto& adj : g.out_) adj.assign(g.nodes_.size(), {});
        for (auto& adj : g.in_) adj.assign(g.nodes_.size(), {});
        for (const auto& e : edges) {
            std::size_t s = g.index_.at(e.src.code), d = g.index_.at(e.dst.code);
            g.out_[rel_slot(e.rel)][s].push_back(d);
            g.in_[rel_slot(e.rel)][d].push_back(s);
        }
        for (auto& per_rel : g.in_)
            for (auto& v : per_rel) std::sort(v.begin(), v.end());
        g.edges_ = std::move(edges);

        g.relation_dag(Relation::IsA).topological_order();
        g.causal_dag_unchecked().topological_order();

        if (summary) {
            summary->duplicates = before - g.edges_.size();
            summary->edges_by_relation.clear();
            for (Relation r : kAllRelations) summary->edges_by_relation[r] = 0;
            for (const auto& e : g.edges_) ++summary->edges_by_relation[e.rel];
        }
        return g;
    }

    const std::vector<NodeId>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    bool contains(const NodeId& n) const {
        auto it = index_.find(n.code);
        return it != index_.end() && nodes_[it->second].kind == n.kind;
    }

    std::optional<NodeId> find_code(std::string_view code) const {
        auto it = index_.find(std::string(code));
        if (it == index_.end()) return std::nullopt;
        return nodes_[it->second];
    }

    /// Targets of `rel` edges leaving `n` (direct only).
    std::vector<NodeId> out(Relation rel, const NodeId& n) const { return collect(out_[rel_slot(rel)][slot(n)]); }
    /// Sources of `rel` edges entering `n` (direct only).
    std::vector<NodeId> in(Relation rel, const NodeId& n) const { return collect(in_[rel_slot(rel)][slot(n)]); }

    bool has_edge(const NodeId& s, Relation rel, const NodeId& d) const {
        return std::binary_search(edges_.begin(), edges_.end(), Edge{s, rel, d});
    }

    std::vector<Edge> edges_of(Relation rel) const {
        std::vector<Edge> r;
        for (const auto& e : edges_)
            if (e.rel == rel) r.push_back(e);
        return r;
    }

    /// Transitive closure following `rel` src→dst (forward) or dst→src.
    NodeSet closure(const NodeId& n, Relation rel, bool forward = true) const {
        const auto& adj = forward ? out_[rel_slot(rel)] : in_[rel_slot(rel)];
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<std::size_t> stack(adj[slot(n)].begin(), adj[slot(n)].end());
        NodeSet result;
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            if (seen[v]) continue;
            seen[v] = 1;
            result.insert(nodes_[v]);
            for (std::size_t w : adj[v]) stack.push_back(w);
        }
        return result;
    }

    /// Causal DAG: CausesOnset as asserted, IndicatedFor reversed.
    Dag causal_dag() const {
        Dag dag = causal_dag_unchecked();
        dag.topological_order();
        return dag;
    }

    std::size_t slot(const NodeId& n) const {
        auto it = index_.find(n.code);
        if (it == index_.end() || nodes_[it->second].kind != n.kind)
            fail(Errc::UnknownNode, std::string(kind_name(n.kind)) + " '" + n.code + "' not in graph");
        return it->second;
    }

private:
    static std::size_t rel_slot(Relation r) { return static_cast<std::size_t>(r); }

    std::vector<NodeId> collect(const std::vector<std::size_t>& idx) const {
        std::vector<NodeId> r;
        r.reserve(idx.size());
        for (std::size_t i : idx) r.push_back(nodes_[i]);
        std::sort(r.begin(), r.end());
        return r;
    }

    Dag relation_dag(Relation rel) const {
        Dag dag(nodes_);
        for (const auto& e : edges_)
            if (e.rel == rel) dag.add_edge(e.src, e.dst);
        return dag;
    }

    Dag causal_dag_unchecked() const {
        Dag dag(nodes_);
        for (const auto& e : edges_) {
            for (const auto& cr : kCausalRelations) {
                if (e.rel != cr.rel) continue;
                if (cr.inverted) dag.add_edge(e.dst, e.src);
                else dag.add_edge(e.src, e.dst);
            }
        }
        return dag;
    }

    std::vector<NodeId> nodes_;
    std::map<std::string, std::size_t> index_;
    std::vector<Edge> edges_;
    std::array<std::vector<std::vector<std::size_t>>, 4> out_;
    std::array<std::vector<std::vector<std::size_t>>, 4> in_;
};

/// Parses graph.tsv content: subject, relation, object, subject_kind,
/// object_kind. `origin` prefixes error messages.
inline CausalKnowledgeGraph parse_graph(std::istream& in, const std::string& origin = "graph.tsv",
                                        LoadSummary* summary = nullptr) {
    std::vector<Edge> edges;
    std::string line;
    std::vector<std::string> f;
    std::size_t lineno = 0, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        csv::split_record(line, '\t', f);
        auto where = origin + ":" + std::to_string(lineno) + ": ";
        if (f.size() != 5) fail(Errc::Parse, where + "expected 5 tab-separated fields, got " + std::to_string(f.size()));
        auto rel = parse_relation(f[1]);
        if (!rel) fail(Errc::Parse, where + "unknown relation '" + f[1] + "'");
        NodeKind sk, dk;
        try {
            sk = parse_kind(f[3]);
            dk = parse_kind(f[4]);
        } catch (const Error& e) {
            fail(Errc::Parse, where + e.what());
        }
        if (f[0].empty() || f[2].empty()) fail(Errc::Parse, where + "empty node code");
        edges.push_back(Edge{NodeId{sk, f[0]}, *rel, NodeId{dk, f[2]}});
        ++rows;
    }
    auto g = CausalKnowledgeGraph::from_edges(std::move(edges), {}, summary);
    if (summary) summary->rows = rows;
    return g;
}

inline CausalKnowledgeGraph load_graph(const std::string& path, LoadSummary* summary = nullptr) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path);
    return parse_graph(in, path, summary);
}

inline void write_graph(std::ostream& out, const CausalKnowledgeGraph& g) {
    for (const auto& e : g.edges()) {
        out << e.src.code << '\t' << relation_name(e.rel) << '\t' << e.dst.code << '\t' << kind_name(e.src.kind)
            << '\t' << kind_name(e.dst.kind) << '\n';
    }
}

inline Dag causal_dag(const CausalKnowledgeGraph& g) { return g.causal_dag(); }

/// Transitive closure of `rel` from `node`, excluding the node itself.
inline NodeSet ancestors(const CausalKnowledgeGraph& g, const NodeId& node, Relation rel) {
    return g.closure(node, rel, true);
}

/// Nodes reaching `node` through `rel` edges (e.g. IsA children, grandchildren).
inline NodeSet descendants(const CausalKnowledgeGraph& g, const NodeId& node, Relation rel) {
    return g.closure(node, rel, false);
}

/// Drugs with an asserted IndicatedFor edge into `disease`; no IsA expansion.
inline NodeSet indicated_drugs(const CausalKnowledgeGraph& g, const NodeId& disease) {
    if (disease.kind != NodeKind::Disease) fail(Errc::KindMismatch, "indicated_drugs expects a disease, got drug '" + disease.code + "'");
    auto v = g.in(Relation::IndicatedFor, disease);
    return NodeSet(v.begin(), v.end());
}

inline NodeSet side_effects_of(const CausalKnowledgeGraph& g, const NodeId& drug) {
    if (drug.kind != NodeKind::Drug) fail(Errc::KindMismatch, "side_effects_of expects a drug, got disease '" + drug.code + "'");
    auto v = g.out(Relation::HasSideEffect, drug);
    return NodeSet(v.begin(), v.end());
}

inline NodeSet indications_of(const CausalKnowledgeGraph& g, const NodeId& drug) {
    if (drug.kind != NodeKind::Drug) fail(Errc::KindMismatch, "indications_of expects a drug, got disease '" + drug.code + "'");
    auto v = g.out(Relation::IndicatedFor, drug);
    return NodeSet(v.begin(), v.end());
}

} // namespace ckg
