#pragma once

#include <string>
#include <string_view>

#include "ckg/error.hpp"
#include "ckg/node.hpp"

namespace ckg {

enum class HypothesisSource { CausalSet, ComorbiditySet };

inline std::string_view source_name(HypothesisSource s) {
    return s == HypothesisSource::CausalSet ? "causal" : "comorbidity";
}

inline HypothesisSource parse_source(std::string_view s) {
    if (s == "causal") return HypothesisSource::CausalSet;
    if (s == "comorbidity") return HypothesisSource::ComorbiditySet;
    fail(Errc::Parse, "unknown hypothesis source '" + std::string(s) + "'");
}

/// indication →(prescription)→ drug →(onset)→ outcome
struct Hypothesis {
    NodeId indication;
    NodeId drug;
    NodeId outcome;
    HypothesisSource source = HypothesisSource::CausalSet;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
    friend auto operator<=>(const Hypothesis& a, const Hypothesis& b) {
        if (auto c = a.indication <=> b.indication; c != 0) return c;
        if (auto c = a.drug <=> b.drug; c != 0) return c;
        if (auto c = a.outcome <=> b.outcome; c != 0) return c;
        return a.source <=> b.source;
    }

    std::string label() const { return indication.code + "|" + drug.code + "|" + outcome.code; }
};

enum class Criterion { Backdoor, DisjunctiveCause, None };

inline std::string_view criterion_name(Criterion c) {
    switch (c) {
    case Criterion::Backdoor: return "backdoor";
    case Criterion::DisjunctiveCause: return "disjunctive";
    case Criterion::None: return "none";
    }
    return "?";
}

inline Criterion parse_criterion(std::string_view s) {
    if (s == "backdoor") return Criterion::Backdoor;
    if (s == "disjunctive") return Criterion::DisjunctiveCause;
    if (s == "none") return Criterion::None;
    fail(Errc::Config, "unknown criterion '" + std::string(s) + "' (expected backdoor, disjunctive or none)");
}

/// Confounders chosen for one hypothesis, with how they were obtained.
struct AdjustmentSet {
    NodeSet nodes;
    Criterion criterion = Criterion::None;
    bool pruned = false;
    bool lasso_selected = false;
};

} // namespace ckg
