#pragma once

#include <compare>
#include <set>
#include <string>
#include <string_view>

#include "ckg/error.hpp"

namespace ckg {

enum class NodeKind { Disease, Drug };

inline std::string_view kind_name(NodeKind k) { return k == NodeKind::Disease ? "disease" : "drug"; }

inline NodeKind parse_kind(std::string_view s) {
    if (s == "disease") return NodeKind::Disease;
    if (s == "drug") return NodeKind::Drug;
    fail(Errc::Parse, "unknown node kind '" + std::string(s) + "'");
}

/// Graph vertex: a vocabulary code tagged with its kind. Ordered by code first,
/// which is the canonical order for every enumeration in the library.
struct NodeId {
    NodeKind kind = NodeKind::Disease;
    std::string code;

    static NodeId disease(std::string c) { return {NodeKind::Disease, std::move(c)}; }
    static NodeId drug(std::string c) { return {NodeKind::Drug, std::move(c)}; }

    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend std::strong_ordering operator<=>(const NodeId& a, const NodeId& b) {
        if (auto c = a.code <=> b.code; c != 0) return c;
        return a.kind <=> b.kind;
    }
};

using NodeSet = std::set<NodeId>;

} // namespace ckg
