#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ckg {

enum class Errc {
    Parse,
    KindMismatch,
    Cycle,
    UnknownNode,
    Date,
    EmptyCohort,
    NoRecords,
    EmptySample,
    DegenerateSample,
    Domain,
    Overlap,
    NoValidSet,
    RankDeficient,
    NonFinite,
    Separation,
    DegenerateOutcome,
    BothEmpty,
    OneClass,
    EmptyInput,
    Spec,
    ConvergenceFailure,
    Io,
    Config,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
    case Errc::Parse: return "ParseError";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::Cycle: return "CycleError";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::Date: return "DateError";
    case Errc::EmptyCohort: return "EmptyCohort";
    case Errc::NoRecords: return "NoRecords";
    case Errc::EmptySample: return "EmptySample";
    case Errc::DegenerateSample: return "DegenerateSample";
    case Errc::Domain: return "DomainError";
    case Errc::Overlap: return "OverlapError";
    case Errc::NoValidSet: return "NoValidSet";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NonFinite: return "NonFinite";
    case Errc::Separation: return "Separation";
    case Errc::DegenerateOutcome: return "DegenerateOutcome";
    case Errc::BothEmpty: return "BothEmpty";
    case Errc::OneClass: return "OneClass";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::Spec: return "SpecError";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
    case Errc::Io: return "IoError";
    case Errc::Config: return "ConfigError";
    }
    return "Error";
}

/// Single exception type for the library; `code()` distinguishes the failure.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace ckg
