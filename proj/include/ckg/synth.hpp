#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ckg/cohort.hpp"
#include "ckg/csv.hpp"
#include "ckg/date.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/rng.hpp"

// Ground-truth structural causal models for validation. This header must not
// depend on the estimation code (glm, lasso, mediation).

namespace ckg::synth {

enum class Link { Linear, Logistic };

enum class Role { Baseline, Confounder, Treatment, Mediator, Outcome, Latent };

inline std::string_view role_name(Role r) {
    switch (r) {
    case Role::Baseline: return "baseline";
    case Role::Confounder: return "confounder";
    case Role::Treatment: return "treatment";
    case Role::Mediator: return "mediator";
    case Role::Outcome: return "outcome";
    case Role::Latent: return "latent";
    }
    return "?";
}

/// x = f(intercept + sum coef_k * parent_k, u_x): linear adds sd * N(0,1);
/// logistic draws Bernoulli(logit^-1(.)).
struct Variable {
    std::string name;
    Role role = Role::Latent;
    Link link = Link::Linear;
    std::vector<std::string> parents;
    double intercept = 0.0;
    std::vector<double> coefs;
    double sd = 1.0;
    std::string code; ///< graph/cohort code for disease and drug roles

    bool is_node() const { return role == Role::Confounder || role == Role::Treatment || role == Role::Mediator || role == Role::Outcome; }
    NodeKind kind() const { return role == Role::Mediator ? NodeKind::Drug : NodeKind::Disease; }
};

struct ScmSpec {
    std::vector<Variable> variables; ///< topological order after parsing
    Date start = Date::from_ymd(2010, 1, 1);
    int window_days = 3650;
    double indication_lag_p = 0.1; ///< exposure start = indication + Geometric(p)
    double outcome_lag_p = 0.05;
    int exposure_days = 30;
    std::string visit_code = "Z00";
    std::string followup_code = "Z09";
    std::vector<Edge> extra_edges;

    const Variable& var(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return v;
        fail(Errc::Spec, "unknown variable '" + name + "'");
    }

    std::size_t index(const std::string& name) const {
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (variables[i].name == name) return i;
        fail(Errc::Spec, "unknown variable '" + name + "'");
    }

    std::vector<std::string> with_role(Role r) const {
        std::vector<std::string> out;
        for (const auto& v : variables)
            if (v.role == r) out.push_back(v.name);
        return out;
    }
};

namespace detail {

inline double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = std::string(csv::trim(item));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(Errc::Spec, where + "not a number: '" + s + "'");
    }
}

inline Role parse_role(const std::string& s, const std::string& where) {
    for (Role r : {Role::Baseline, Role::Confounder, Role::Treatment, Role::Mediator, Role::Outcome, Role::Latent})
        if (role_name(r) == s) return r;
    fail(Errc::Spec, where + "unknown role '" + s + "'");
}

/// Orders variables so every parent precedes its children; SpecError on a cycle.
inline void topo_sort(ScmSpec& spec) {
    std::vector<Variable> sorted;
    std::vector<char> done(spec.variables.size(), 0);
    while (sorted.size() < spec.variables.size()) {
        bool progress = false;
        for (std::size_t i = 0; i < spec.variables.size(); ++i) {
            if (done[i]) continue;
            const auto& v = spec.variables[i];
            bool ready = std::all_of(v.parents.begin(), v.parents.end(), [&](const std::string& p) {
                return std::any_of(sorted.begin(), sorted.end(), [&](const Variable& s) { return s.name == p; });
            });
            if (ready) {
                sorted.push_back(v);
                done[i] = 1;
                progress = true;
            }
        }
        if (!progress) fail(Errc::Spec, "structural assignments form a cycle");
    }
    spec.variables = std::move(sorted);
}

} // namespace detail

/// Flat key=value spec. Keys:
///   var.<name>.role     baseline | confounder | treatment | mediator | outcome | latent
///   var.<name>.link     linear | logistic
///   var.<name>.parents  comma list
///   var.<name>.coef     intercept, then one coefficient per parent
///   var.<name>.sd       noise SD for linear links (default 1)
///   var.<name>.code     node code (default: the name)
///   start_date, window_days, indication_lag_p, outcome_lag_p, exposure_days,
///   visit_code, followup_code, extra_edge = <src> <relation> <dst> <src_kind> <dst_kind>
inline ScmSpec parse_spec(std::istream& in, const std::string& origin = "spec") {
    ScmSpec spec;
    std::map<std::string, std::size_t> pos;
    auto var = [&](const std::string& name) -> Variable& {
        auto it = pos.find(name);
        if (it == pos.end()) {
            it = pos.emplace(name, spec.variables.size()).first;
            spec.variables.push_back(Variable{});
            spec.variables.back().name = name;
        }
        return spec.variables[it->second];
    };
    std::map<std::string, std::vector<double>> raw_coefs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        auto text = std::string(csv::trim(line));
        if (text.empty() || text[0] == '#') continue;
        auto eq = text.find('=');
        if (eq == std::string::npos) fail(Errc::Spec, where + "expected key = value");
        auto key = std::string(csv::trim(std::string_view(text).substr(0, eq)));
        auto value = std::string(csv::trim(std::string_view(text).substr(eq + 1)));
        if (key.rfind("var.", 0) == 0) {
            auto dot = key.rfind('.');
            if (dot <= 4) fail(Errc::Spec, where + "malformed key '" + key + "'");
            auto name = key.substr(4, dot - 4);
            auto field = key.substr(dot + 1);
            auto& v = var(name);
            if (field == "role") v.role = detail::parse_role(value, where);
            else if (field == "link") {
                if (value == "linear") v.link = Link::Linear;
                else if (value == "logistic") v.link = Link::Logistic;
                else fail(Errc::Spec, where + "unknown link '" + value + "'");
            } else if (field == "parents") v.parents = detail::split_list(value);
            else if (field == "coef") {
                std::vector<double> c;
                for (const auto& item : detail::split_list(value)) c.push_back(detail::to_double(item, where));
                raw_coefs[name] = c;
            } else if (field == "sd") v.sd = detail::to_double(value, where);
            else if (field == "code") v.code = value;
            else fail(Errc::Spec, where + "unknown field '" + field + "'");
        } else if (key == "start_date") {
            try {
                spec.start = Date::parse(value);
            } catch (const Error& e) {
                fail(Errc::Spec, where + e.what());
            }
        } else if (key == "window_days") spec.window_days = static_cast<int>(detail::to_double(value, where));
        else if (key == "indication_lag_p") spec.indication_lag_p = detail::to_double(value, where);
        else if (key == "outcome_lag_p") spec.outcome_lag_p = detail::to_double(value, where);
        else if (key == "exposure_days") spec.exposure_days = static_cast<int>(detail::to_double(value, where));
        else if (key == "visit_code") spec.visit_code = value;
        else if (key == "followup_code") spec.followup_code = value;
        else if (key == "extra_edge") {
            std::stringstream ss(value);
            std::string s, r, d, sk, dk;
            ss >> s >> r >> d >> sk >> dk;
            auto rel = parse_relation(r);
            if (dk.empty() || !rel) fail(Errc::Spec, where + "extra_edge needs: src relation dst src_kind dst_kind");
            try {
                spec.extra_edges.push_back(Edge{NodeId{parse_kind(sk), s}, *rel, NodeId{parse_kind(dk), d}});
            } catch (const Error& e) {
                fail(Errc::Spec, where + e.what());
            }
        } else {
            fail(Errc::Spec, where + "unknown key '" + key + "'");
        }
    }

    for (auto& v : spec.variables) {
        auto it = raw_coefs.find(v.name);
        std::vector<double> c = it == raw_coefs.end() ? std::vector<double>{} : it->second;
        if (c.size() != v.parents.size() + 1)
            fail(Errc::Spec, origin + ": variable '" + v.name + "' needs " + std::to_string(v.parents.size() + 1) +
                                 " coefficients (intercept first), got " + std::to_string(c.size()));
        v.intercept = c[0];
        v.coefs.assign(c.begin() + 1, c.end());
        if (v.code.empty()) v.code = v.name;
        if (!(v.sd >= 0)) fail(Errc::Spec, origin + ": negative sd for '" + v.name + "'");
        for (const auto& p : v.parents) {
            if (!pos.count(p)) fail(Errc::Spec, origin + ": '" + v.name + "' has undeclared parent '" + p + "'");
            if (p == v.name) fail(Errc::Spec, origin + ": '" + v.name + "' is its own parent");
        }
    }
    std::map<std::string, std::string> codes;
    for (const auto& v : spec.variables)
        if (v.is_node()) {
            auto [it, inserted] = codes.emplace(v.code, v.name);
            if (!inserted) fail(Errc::Spec, origin + ": code '" + v.code + "' used by both '" + it->second + "' and '" + v.name + "'");
        }
    if (!(spec.indication_lag_p > 0 && spec.indication_lag_p <= 1 && spec.outcome_lag_p > 0 && spec.outcome_lag_p <= 1))
        fail(Errc::Spec, origin + ": lag probabilities must lie in (0, 1]");
    if (spec.window_days < 1 || spec.exposure_days < 1) fail(Errc::Spec, origin + ": window_days and exposure_days must be positive");
    detail::topo_sort(spec);
    return spec;
}

inline ScmSpec parse_spec_string(const std::string& text) {
    std::istringstream in(text);
    return parse_spec(in, "spec");
}

inline ScmSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path);
    return parse_spec(in, path);
}

/// Structural value of `v` given parent values and a standard-normal or
/// uniform noise term.
inline double assign(const Variable& v, const std::vector<double>& values, const ScmSpec& spec, double noise) {
    double eta = v.intercept;
    for (std::size_t k = 0; k < v.parents.size(); ++k) eta += v.coefs[k] * values[spec.index(v.parents[k])];
    if (v.link == Link::Linear) return eta + v.sd * noise;
    return noise < detail::logistic(eta) ? 1.0 : 0.0;
}

/// Edges implied by the roles: disease parents cause disease children, the
/// drug is indicated for its disease parents, each treatment causes each
/// outcome; plus any extra edges.
inline std::vector<Edge> implied_edges(const ScmSpec& spec) {
    std::vector<Edge> edges;
    for (const auto& v : spec.variables) {
        if (!v.is_node()) continue;
        NodeId child{v.kind(), v.code};
        for (const auto& pname : v.parents) {
            const auto& p = spec.var(pname);
            if (!p.is_node() || p.kind() != NodeKind::Disease) continue;
            NodeId parent{NodeKind::Disease, p.code};
            if (v.kind() == NodeKind::Drug) edges.push_back(Edge{child, Relation::IndicatedFor, parent});
            else edges.push_back(Edge{parent, Relation::CausesOnset, child});
        }
    }
    for (const auto& t : spec.with_role(Role::Treatment))
        for (const auto& y : spec.with_role(Role::Outcome))
            edges.push_back(Edge{NodeId::disease(spec.var(t).code), Relation::CausesOnset, NodeId::disease(spec.var(y).code)});
    edges.insert(edges.end(), spec.extra_edges.begin(), spec.extra_edges.end());
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

struct SyntheticData {
    Cohort cohort;
    CausalKnowledgeGraph graph;
    std::vector<std::vector<double>> values; ///< per person, aligned with spec.variables
};

inline std::string person_id(std::size_t i, std::size_t n) {
    std::ostringstream s;
    s << 'P' << std::setw(static_cast<int>(std::to_string(n).size())) << std::setfill('0') << i + 1;
    return s.str();
}

/// Samples n persons i.i.d. from the SCM (one RNG substream per person) and
/// turns them into dated records:
///   enrollment visit and confounder diagnoses at E, uniform in the window;
///   indication at E + 1 + Geometric; exposure one day plus Geometric after the
///   indication (or after E + 1 when untreated); outcome one day plus Geometric after
///   the latest of these; a follow-up visit after everything.
inline SyntheticData simulate(const ScmSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) fail(Errc::Spec, "n must be at least 1");
    for (const auto& v : spec.variables)
        if (v.is_node() && v.link != Link::Logistic)
            fail(Errc::Spec, "variable '" + v.name + "' has role " + std::string(role_name(v.role)) + " and must use the logistic link");
    const auto& vars = spec.variables;
    SyntheticData out{Cohort{}, CausalKnowledgeGraph::from_edges(implied_edges(spec), {}), {}};
    std::vector<PersonRecord> persons(n);
    out.values.assign(n, std::vector<double>(vars.size(), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::stream(seed, i);
        auto& x = out.values[i];
        for (std::size_t k = 0; k < vars.size(); ++k)
            x[k] = assign(vars[k], x, spec, vars[k].link == Link::Linear ? rng.normal() : rng.uniform());

        PersonRecord& p = persons[i];
        p.id = person_id(i, n);
        const Date enroll = spec.start.plus_days(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(spec.window_days))));
        Date last = enroll;
        p.diagnoses.push_back({spec.visit_code, enroll});
        std::map<std::string, Date> indication_date;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            const auto& v = vars[k];
            if (v.role == Role::Baseline) p.baseline[v.name] = x[k];
            if (v.role == Role::Confounder && x[k] == 1.0) p.diagnoses.push_back({v.code, enroll});
        }
        for (std::size_t k = 0; k < vars.size(); ++k) {
            if (vars[k].role != Role::Treatment || x[k] != 1.0) continue;
            Date d = enroll.plus_days(1 + static_cast<std::int32_t>(rng.geometric(spec.indication_lag_p)));
            indication_date[vars[k].name] = d;
            p.diagnoses.push_back({vars[k].code, d});
            last = std::max(last, d);
        }
        std::vector<Date> exposure_starts;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            const auto& v = vars[k];
            if (v.role != Role::Mediator || x[k] != 1.0) continue;
            Date from = enroll.plus_days(1);
            for (const auto& parent : v.parents)
                if (auto it = indication_date.find(parent); it != indication_date.end()) from = std::max(from, it->second);
            Date start = from.plus_days(1 + static_cast<std::int32_t>(rng.geometric(spec.indication_lag_p)));
            p.exposures.push_back({v.code, start, start.plus_days(spec.exposure_days - 1)});
            last = std::max(last, start);
        }
        Date final_day = last;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            if (vars[k].role != Role::Outcome || x[k] != 1.0) continue;
            Date d = last.plus_days(1 + static_cast<std::int32_t>(rng.geometric(spec.outcome_lag_p)));
            p.diagnoses.push_back({vars[k].code, d});
            final_day = std::max(final_day, d);
        }
        for (const auto& e : p.exposures) final_day = std::max(final_day, e.last());
        p.diagnoses.push_back({spec.followup_code, final_day.plus_days(1)});
    }
    out.cohort = Cohort::from_persons(std::move(persons));
    return out;
}

inline std::string format_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

/// Writes diagnoses.csv, exposures.csv, baseline.csv and graph.tsv into `dir`.
/// `header` (if non-empty) is written as a leading comment line.
inline void write_synthetic(const SyntheticData& data, const std::string& dir, const std::string& header = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) fail(Errc::Io, "cannot write " + (fs::path(dir) / name).string());
        if (!header.empty()) f << "# " << header << '\n';
        return f;
    };
    auto dx = open("diagnoses.csv");
    auto rx = open("exposures.csv");
    auto bl = open("baseline.csv");
    dx << "person_id,code,date\n";
    rx << "person_id,drug_code,start_date,end_date\n";
    bl << "person_id,name,value\n";
    for (const auto& p : data.cohort.persons()) {
        for (const auto& d : p.diagnoses) dx << p.id << ',' << csv::quote(d.code) << ',' << d.date.to_string() << '\n';
        for (const auto& e : p.exposures)
            rx << p.id << ',' << csv::quote(e.drug) << ',' << e.start.to_string() << ','
               << (e.end ? e.end->to_string() : std::string{}) << '\n';
        for (const auto& [name, v] : p.baseline) bl << p.id << ',' << csv::quote(name) << ',' << format_number(v) << '\n';
    }
    auto gr = open("graph.tsv");
    write_graph(gr, data.graph);
}

inline SyntheticData generate_cohort(const ScmSpec& spec, std::size_t n, std::uint64_t seed, const std::string& dir,
                                     const std::string& header = {}) {
    auto data = simulate(spec, n, seed);
    write_synthetic(data, dir, header);
    return data;
}

struct TrueAcme {
    double value = 0.0;
    double mc_se = 0.0;
    std::size_t draws = 0;
    std::optional<double> closed_form; ///< all-linear specs only
};

struct EffectRoles {
    std::string treatment, mediator, outcome; ///< empty: the unique variable with that role
};

namespace detail {

inline std::string resolve(const ScmSpec& spec, const std::string& given, Role r) {
    if (!given.empty()) {
        if (spec.var(given).role != r) fail(Errc::Spec, "'" + given + "' does not have role " + std::string(role_name(r)));
        return given;
    }
    auto all = spec.with_role(r);
    if (all.size() != 1) fail(Errc::Spec, "spec has " + std::to_string(all.size()) + " variables with role " + std::string(role_name(r)) + "; name one");
    return all[0];
}

inline bool depends_on(const ScmSpec& spec, const std::string& var, const std::string& root) {
    if (var == root) return true;
    for (const auto& p : spec.var(var).parents)
        if (depends_on(spec, p, root)) return true;
    return false;
}

} // namespace detail

/// Monte Carlo natural indirect effect E[Y(0, M(1)) - Y(0, M(0))] from the
/// structural equations. Each draw shares all noise between the two mediator
/// worlds; for a logistic outcome the draw contributes the outcome-probability
/// difference. All-linear specs also get the product-of-coefficients value,
/// which must agree within 4 Monte Carlo standard errors.
inline TrueAcme true_acme(const ScmSpec& spec, std::size_t mc_draws = 10'000'000, std::uint64_t seed = 0,
                          const EffectRoles& roles = {}) {
    if (mc_draws < 2) fail(Errc::Spec, "true_acme needs at least 2 draws");
    const auto t = detail::resolve(spec, roles.treatment, Role::Treatment);
    const auto m = detail::resolve(spec, roles.mediator, Role::Mediator);
    const auto y = detail::resolve(spec, roles.outcome, Role::Outcome);
    const auto ti = spec.index(t), mi = spec.index(m), yi = spec.index(y);
    const auto& M = spec.variables[mi];
    const auto& Y = spec.variables[yi];
    for (const auto& p : M.parents)
        if (p != t && detail::depends_on(spec, p, t)) fail(Errc::Spec, "mediator parent '" + p + "' depends on the treatment");
    for (const auto& p : Y.parents)
        if (p != t && p != m && detail::depends_on(spec, p, t)) fail(Errc::Spec, "outcome parent '" + p + "' depends on the treatment");

    const auto& vars = spec.variables;
    std::vector<double> x(vars.size(), 0.0);
    double sum = 0.0, sumsq = 0.0;
    Rng rng(seed);
    for (std::size_t d = 0; d < mc_draws; ++d) {
        for (std::size_t k = 0; k < vars.size(); ++k) {
            double noise = vars[k].link == Link::Linear ? rng.normal() : rng.uniform();
            if (k == ti || k == mi || k == yi) {
                x[k] = 0.0;
                continue;
            }
            x[k] = assign(vars[k], x, spec, noise);
        }
        const double u_m = M.link == Link::Linear ? rng.normal() : rng.uniform();
        const double u_y = rng.normal();
        x[ti] = 1.0;
        const double m1 = assign(M, x, spec, u_m);
        x[ti] = 0.0;
        const double m0 = assign(M, x, spec, u_m);
        auto outcome = [&](double mv) {
            x[mi] = mv;
            double eta = Y.intercept;
            for (std::size_t k = 0; k < Y.parents.size(); ++k) eta += Y.coefs[k] * x[spec.index(Y.parents[k])];
            return Y.link == Link::Linear ? eta + Y.sd * u_y : detail::logistic(eta);
        };
        const double diff = outcome(m1) - outcome(m0);
        sum += diff;
        sumsq += diff * diff;
    }
    TrueAcme r;
    r.draws = mc_draws;
    const double nd = static_cast<double>(mc_draws);
    r.value = sum / nd;
    r.mc_se = std::sqrt(std::max(0.0, sumsq / nd - r.value * r.value) / (nd - 1.0));

    if (M.link == Link::Linear && Y.link == Link::Linear) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < M.parents.size(); ++k)
            if (M.parents[k] == t) a += M.coefs[k];
        for (std::size_t k = 0; k < Y.parents.size(); ++k)
            if (Y.parents[k] == m) b += Y.coefs[k];
        r.closed_form = a * b;
        const double tol = std::max(4.0 * r.mc_se, 1e-9 * std::max(1.0, std::abs(a * b)));
        if (std::abs(*r.closed_form - r.value) > tol)
            fail(Errc::Spec, "Monte Carlo value disagrees with the closed form beyond 4 standard errors");
    }
    return r;
}

} // namespace ckg::synth
