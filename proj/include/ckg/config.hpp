#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ckg/csv.hpp"
#include "ckg/error.hpp"
#include "ckg/hash.hpp"
#include "ckg/types.hpp"

namespace ckg {

inline constexpr const char* kVersion = "0.1.0";

/// Run parameters. Read from a flat key=value file, then overridden by flags.
struct RunConfig {
    std::string graph;
    std::string diagnoses;
    std::string exposures;
    std::string baseline;
    std::string reference;
    std::string hypotheses;
    std::string mediation;
    std::string spec;
    std::string out_dir = ".";
    HypothesisSource source = HypothesisSource::CausalSet;
    std::vector<Criterion> criteria{Criterion::DisjunctiveCause};
    bool lasso = false;
    double alpha = 0.05;
    std::size_t nsim = 1000;
    std::size_t backdoor_limit = 1000;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t n = 1000;
    std::size_t oracle_draws = 0;
    std::optional<double> precision;
    std::optional<double> recall;

    bool has_cohort() const { return !diagnoses.empty() || !exposures.empty() || !baseline.empty(); }

    void set(const std::string& key, const std::string& value);
    void validate() const;
    std::string canonical() const;
    std::string hash() const;
    std::string header() const;
};

namespace detail {

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        fail(Errc::Config, key + " must be a non-negative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        fail(Errc::Config, key + " is out of range: '" + v + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(Errc::Config, key + " must be a number, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(Errc::Config, key + " must be true or false, got '" + v + "'");
}

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "graph") graph = value;
    else if (key == "diagnoses") diagnoses = value;
    else if (key == "exposures") exposures = value;
    else if (key == "baseline") baseline = value;
    else if (key == "reference") reference = value;
    else if (key == "hypotheses") hypotheses = value;
    else if (key == "mediation") mediation = value;
    else if (key == "spec") spec = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "source") {
        try {
            source = parse_source(value);
        } catch (const Error&) {
            fail(Errc::Config, "source must be causal or comorbidity, got '" + value + "'");
        }
    } else if (key == "criterion") {
        criteria.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) criteria.push_back(parse_criterion(csv::trim(item)));
        if (criteria.empty()) fail(Errc::Config, "criterion list is empty");
    } else if (key == "lasso") lasso = detail::parse_bool(key, value);
    else if (key == "alpha") alpha = detail::parse_real(key, value);
    else if (key == "nsim") nsim = detail::parse_count(key, value);
    else if (key == "backdoor_limit") backdoor_limit = detail::parse_count(key, value);
    else if (key == "folds") folds = detail::parse_count(key, value);
    else if (key == "seed") seed = detail::parse_count(key, value);
    else if (key == "threads") threads = detail::parse_count(key, value);
    else if (key == "n") n = detail::parse_count(key, value);
    else if (key == "oracle_draws") oracle_draws = detail::parse_count(key, value);
    else if (key == "precision") precision = detail::parse_real(key, value);
    else if (key == "recall") recall = detail::parse_real(key, value);
    else fail(Errc::Config, "unknown config key '" + key + "'");
}

inline void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::Config, "alpha must lie in (0, 1)");
    if (nsim < 100) fail(Errc::Config, "nsim must be at least 100");
    if (folds < 2) fail(Errc::Config, "folds must be at least 2");
    if (backdoor_limit < 1) fail(Errc::Config, "backdoor_limit must be at least 1");
    if (threads < 1) fail(Errc::Config, "threads must be at least 1");
}

/// Every setting except `threads`, which does not affect results.
inline std::string RunConfig::canonical() const {
    std::ostringstream s;
    s << "graph=" << graph << "\ndiagnoses=" << diagnoses << "\nexposures=" << exposures << "\nbaseline=" << baseline
      << "\nreference=" << reference << "\nhypotheses=" << hypotheses << "\nmediation=" << mediation
      << "\nspec=" << spec << "\nsource=" << source_name(source) << "\ncriterion=";
    for (std::size_t i = 0; i < criteria.size(); ++i) s << (i ? "," : "") << criterion_name(criteria[i]);
    s << "\nlasso=" << (lasso ? "true" : "false") << "\nalpha=" << detail::format_real(alpha) << "\nnsim=" << nsim
      << "\nbackdoor_limit=" << backdoor_limit << "\nfolds=" << folds << "\nseed=" << seed << "\nn=" << n
      << "\noracle_draws=" << oracle_draws << '\n';
    return s.str();
}

inline std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

/// First line of every output file.
inline std::string RunConfig::header() const {
    return "# ckg " + std::string(kVersion) + " config=" + hash() + " seed=" + std::to_string(seed);
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = csv::trim(line);
        if (text.empty() || text[0] == '#') continue;
        auto eq = text.find('=');
        if (eq == std::string_view::npos)
            fail(Errc::Config, path + ":" + std::to_string(lineno) + ": expected key = value");
        out[std::string(csv::trim(text.substr(0, eq)))] = std::string(csv::trim(text.substr(eq + 1)));
    }
    return out;
}

} // namespace ckg
