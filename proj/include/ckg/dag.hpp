#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ckg/error.hpp"
#include "ckg/node.hpp"

namespace ckg {

/// Directed graph over NodeId with dense indices. Node indices follow the
/// canonical NodeId order, so iterating indices is iterating codes
/// lexicographically.
class Dag {
public:
    Dag() = default;

    explicit Dag(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
        for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
        children_.resize(nodes_.size());
        parents_.resize(nodes_.size());
    }

    std::size_t size() const { return nodes_.size(); }
    std::size_t num_edges() const { return num_edges_; }
    const std::vector<NodeId>& nodes() const { return nodes_; }
    const NodeId& node(std::size_t i) const { return nodes_[i]; }

    std::optional<std::size_t> find(const NodeId& n) const {
        auto it = index_.find(n);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index(const NodeId& n) const {
        auto i = find(n);
        if (!i) fail(Errc::UnknownNode, "node '" + n.code + "' not in graph");
        return *i;
    }

    bool contains(const NodeId& n) const { return index_.count(n) != 0; }

    bool has_edge(std::size_t u, std::size_t v) const {
        return std::binary_search(children_[u].begin(), children_[u].end(), v);
    }

    /// Inserts u→v; returns false if already present.
    bool add_edge(std::size_t u, std::size_t v) {
        auto& ch = children_[u];
        auto it = std::lower_bound(ch.begin(), ch.end(), v);
        if (it != ch.end() && *it == v) return false;
        ch.insert(it, v);
        auto& pa = parents_[v];
        pa.insert(std::lower_bound(pa.begin(), pa.end(), u), u);
        ++num_edges_;
        return true;
    }

    bool add_edge(const NodeId& u, const NodeId& v) { return add_edge(index(u), index(v)); }

    void remove_out_edges(std::size_t u) {
        for (std::size_t v : children_[u]) {
            auto& pa = parents_[v];
            pa.erase(std::lower_bound(pa.begin(), pa.end(), u));
        }
        num_edges_ -= children_[u].size();
        children_[u].clear();
    }

    const std::vector<std::size_t>& children(std::size_t u) const { return children_[u]; }
    const std::vector<std::size_t>& parents(std::size_t u) const { return parents_[u]; }

    /// Returns one directed cycle as a node sequence (first node repeated at
    /// the end), or nullopt if the graph is acyclic.
    std::optional<std::vector<std::size_t>> find_cycle() const {
        enum : char { White, Grey, Black };
        std::vector<char> color(size(), White);
        std::vector<std::size_t> parent(size(), npos);
        // iterative DFS: (node, next child position)
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        for (std::size_t root = 0; root < size(); ++root) {
            if (color[root] != White) continue;
            stack.emplace_back(root, 0);
            color[root] = Grey;
            while (!stack.empty()) {
                auto& [u, pos] = stack.back();
                if (pos < children_[u].size()) {
                    std::size_t v = children_[u][pos++];
                    if (color[v] == Grey) {
                        std::vector<std::size_t> cycle{v};
                        for (std::size_t w = u; w != v; w = parent[w]) cycle.push_back(w);
                        cycle.push_back(v);
                        std::reverse(cycle.begin(), cycle.end());
                        return cycle;
                    }
                    if (color[v] == White) {
                        color[v] = Grey;
                        parent[v] = u;
                        stack.emplace_back(v, 0);
                    }
                } else {
                    color[u] = Black;
                    stack.pop_back();
                }
            }
        }
        return std::nullopt;
    }

    std::string describe_cycle(const std::vector<std::size_t>& cycle) const {
        std::string s;
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            if (i) s += " -> ";
            s += nodes_[cycle[i]].code;
        }
        return s;
    }

    /// Kahn's algorithm, smallest index first; throws CycleError naming one cycle.
    std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indeg(size());
        for (std::size_t v = 0; v < size(); ++v) indeg[v] = parents_[v].size();
        std::vector<std::size_t> ready;
        for (std::size_t v = size(); v-- > 0;)
            if (indeg[v] == 0) ready.push_back(v);
        std::vector<std::size_t> order;
        order.reserve(size());
        while (!ready.empty()) {
            std::size_t u = ready.back();
            ready.pop_back();
            order.push_back(u);
            for (std::size_t v : children_[u]) {
                if (--indeg[v] == 0) ready.push_back(v);
            }
        }
        if (order.size() != size()) {
            auto cycle = find_cycle();
            fail(Errc::Cycle, "cycle " + (cycle ? describe_cycle(*cycle) : std::string("?")));
        }
        return order;
    }

    /// Strict descendants of u (u itself excluded unless on a cycle).
    std::vector<char> descendants(std::size_t u) const { return reach(u, children_); }
    std::vector<char> ancestors(std::size_t u) const { return reach(u, parents_); }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<char> reach(std::size_t start, const std::vector<std::vector<std::size_t>>& adj) const {
        std::vector<char> seen(size(), 0);
        std::vector<std::size_t> stack(adj[start].begin(), adj[start].end());
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            if (seen[v]) continue;
            seen[v] = 1;
            for (std::size_t w : adj[v])
                if (!seen[w]) stack.push_back(w);
        }
        return seen;
    }

    std::vector<NodeId> nodes_;
    std::map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> parents_;
    std::size_t num_edges_ = 0;
};

} // namespace ckg
