#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ckg/adjustment.hpp"
#include "ckg/cohort.hpp"
#include "ckg/error.hpp"
#include "ckg/glm.hpp"
#include "ckg/graph.hpp"
#include "ckg/hash.hpp"
#include "ckg/lasso.hpp"
#include "ckg/multiple_testing.hpp"
#include "ckg/rng.hpp"
#include "ckg/sample.hpp"
#include "ckg/types.hpp"

namespace ckg {

enum class MediationStatus { Ok, Na, Degenerate };
enum class EffectClass { Na, Insig, Pos, Neg };

inline std::string_view status_name(MediationStatus s) {
    switch (s) {
    case MediationStatus::Ok: return "ok";
    case MediationStatus::Na: return "na";
    case MediationStatus::Degenerate: return "degenerate";
    }
    return "?";
}

inline std::string_view class_name(EffectClass c) {
    switch (c) {
    case EffectClass::Na: return "na";
    case EffectClass::Insig: return "insig";
    case EffectClass::Pos: return "pos";
    case EffectClass::Neg: return "neg";
    }
    return "?";
}

struct MediationResult {
    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    Hypothesis hypothesis;
    Criterion criterion = Criterion::None;
    bool lasso = false;
    NodeSet adjustment;
    double acme = kNaN; ///< indirect effect with treatment held at 0
    double ci_low = kNaN;
    double ci_high = kNaN;
    double p_value = kNaN;
    double p_bh = kNaN;
    double ade = kNaN; ///< direct effect with the mediator at its T = 0 distribution
    double total_effect = kNaN;
    double prop_mediated = kNaN;
    bool interaction_included = false;
    std::size_t n = 0;
    std::size_t n_covariates = 0;
    std::uint64_t seed = 0;
    MediationStatus status = MediationStatus::Na;
    EffectClass effect_class = EffectClass::Na;
    std::string message;
};

/// Population-averaged effects for one parameter draw. Each person contributes
/// mediator probabilities pi(t) and outcome probabilities mu(t, m); the
/// mediator is integrated out exactly.
struct EffectDraw {
    double acme0 = 0, acme1 = 0, ade0 = 0, ade1 = 0, total = 0;
};

/// `base_m` and `base_y` hold each person's linear predictor with T = M = 0.
inline EffectDraw effects_for_draw(const Eigen::VectorXd& base_m, double a_t, const Eigen::VectorXd& base_y, double b_t,
                                   double b_m, double b_tm) {
    using glm::detail::sigmoid;
    EffectDraw e;
    const Eigen::Index n = base_m.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pi0 = sigmoid(base_m[i]);
        const double pi1 = sigmoid(base_m[i] + a_t);
        const double y = base_y[i];
        const double mu00 = sigmoid(y);
        const double mu01 = sigmoid(y + b_m);
        const double mu10 = sigmoid(y + b_t);
        const double mu11 = sigmoid(y + b_t + b_m + b_tm);
        // mu(t, m) written mu<t><m>
        e.acme0 += (pi1 - pi0) * (mu01 - mu00);
        e.acme1 += (pi1 - pi0) * (mu11 - mu10);
        e.ade0 += pi0 * (mu11 - mu01) + (1 - pi0) * (mu10 - mu00);
        e.ade1 += pi1 * (mu11 - mu01) + (1 - pi1) * (mu10 - mu00);
        e.total += pi1 * mu11 + (1 - pi1) * mu10 - pi0 * mu01 - (1 - pi0) * mu00;
    }
    const double dn = static_cast<double>(n);
    e.acme0 /= dn;
    e.acme1 /= dn;
    e.ade0 /= dn;
    e.ade1 /= dn;
    e.total /= dn;
    return e;
}

/// Sample quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

/// Two-sided simulation p-value, floored at 2/(nsim+1).
inline double simulation_p_value(const std::vector<double>& draws) {
    if (draws.empty()) return 1.0;
    std::size_t le = 0, ge = 0;
    for (double d : draws) {
        if (d <= 0) ++le;
        if (d >= 0) ++ge;
    }
    const double nd = static_cast<double>(draws.size());
    double p = 2.0 * static_cast<double>(std::min(le, ge)) / nd;
    return std::clamp(p, 2.0 / (nd + 1.0), 1.0);
}

namespace detail {

inline void require_variation(const AnalysisSample& s) {
    auto constant = [](const Eigen::VectorXd& v) { return v.size() == 0 || v.minCoeff() == v.maxCoeff(); };
    if (constant(s.t)) fail(Errc::DegenerateSample, "T is constant in the sample");
    if (constant(s.m)) fail(Errc::DegenerateSample, "M is constant in the sample");
    if (constant(s.y)) fail(Errc::DegenerateSample, "Y is constant in the sample");
}

inline Eigen::MatrixXd mediator_design(const AnalysisSample& s, const Eigen::MatrixXd& covs) {
    Eigen::MatrixXd X(s.t.size(), covs.cols() + 1);
    X.col(0) = s.t;
    X.rightCols(covs.cols()) = covs;
    return X;
}

inline Eigen::MatrixXd outcome_design(const AnalysisSample& s, const Eigen::MatrixXd& covs, bool interaction) {
    const Eigen::Index extra = interaction ? 3 : 2;
    Eigen::MatrixXd X(s.t.size(), covs.cols() + extra);
    X.col(0) = s.t;
    X.col(1) = s.m;
    if (interaction) X.col(2) = s.t.cwiseProduct(s.m);
    X.rightCols(covs.cols()) = covs;
    return X;
}

inline std::vector<std::string> prefixed(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

/// Unpenalized fit, then one ridge-stabilized retry. Empty when both fail.
inline std::optional<glm::FitResult> robust_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                     const std::vector<std::string>& names) {
    auto fit = glm::fit_logistic(X, y, names);
    if (fit.converged) return fit;
    glm::LogisticOptions ridge;
    ridge.ridge = 1e-6;
    fit = glm::fit_logistic(X, y, names, ridge);
    if (fit.converged) return fit;
    return std::nullopt;
}

/// Draws from N(mean, cov) via a symmetric square root of cov (negative
/// eigenvalues from round-off are clipped to zero).
class MvnSampler {
public:
    MvnSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) : mean_(std::move(mean)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        root_ = es.eigenvectors() * root.asDiagonal();
    }

    Eigen::VectorXd draw(Rng& rng) const {
        Eigen::VectorXd z(mean_.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return mean_ + root_ * z;
    }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd root_;
};

} // namespace detail

/// True iff the T·M coefficient of the outcome model Y ~ T + M + T·M + X has
/// HC1 Wald p < 0.05.
inline bool interaction_significant(const AnalysisSample& s, const std::vector<std::string>& covariate_names) {
    detail::require_variation(s);
    Eigen::MatrixXd covs = s.columns(covariate_names);
    auto X = detail::outcome_design(s, covs, true);
    auto fit = detail::robust_logistic(X, s.y, detail::prefixed({"T", "M", "T:M"}, covariate_names));
    if (!fit || !fit->position(2)) return false;
    return glm::wald_p(fit->coef(2), fit->std_error(2)) < 0.05;
}

/// Quasi-Bayesian ACME estimate. Throws DegenerateSample; a model that fails
/// to converge after the ridge retry yields status na.
inline MediationResult estimate_acme(const AnalysisSample& s, const std::vector<std::string>& covariate_names,
                                     std::size_t nsim = 1000, std::uint64_t seed = 0) {
    if (nsim < 1) fail(Errc::Domain, "nsim must be positive");
    detail::require_variation(s);
    MediationResult r;
    r.hypothesis = s.hypothesis;
    r.n = s.n();
    r.n_covariates = covariate_names.size();
    r.seed = seed;

    Eigen::MatrixXd covs = s.columns(covariate_names);
    const auto p = static_cast<std::size_t>(covs.cols());
    auto med = detail::robust_logistic(detail::mediator_design(s, covs), s.m, detail::prefixed({"T"}, covariate_names));
    if (!med) {
        r.status = MediationStatus::Na;
        r.message = "ConvergenceFailure: mediator model";
        return r;
    }
    r.interaction_included = interaction_significant(s, covariate_names);
    const bool inter = r.interaction_included;
    const std::size_t lead = inter ? 3 : 2;
    auto out = detail::robust_logistic(detail::outcome_design(s, covs, inter), s.y,
                                       inter ? detail::prefixed({"T", "M", "T:M"}, covariate_names)
                                             : detail::prefixed({"T", "M"}, covariate_names));
    if (!out) {
        r.status = MediationStatus::Na;
        r.message = "ConvergenceFailure: outcome model";
        return r;
    }

    // Parameters live in the full [1, design] layout; dropped columns stay 0.
    const detail::MvnSampler med_draws(med->full_coefficients(p + 1), med->full_covariance(p + 1));
    const detail::MvnSampler out_draws(out->full_coefficients(p + lead), out->full_covariance(p + lead));

    Rng rng(seed);
    std::vector<double> acme0(nsim), ade0(nsim), total(nsim), ratio;
    ratio.reserve(nsim);
    Eigen::VectorXd base_m(covs.rows()), base_y(covs.rows());
    for (std::size_t k = 0; k < nsim; ++k) {
        Eigen::VectorXd a = med_draws.draw(rng);
        Eigen::VectorXd b = out_draws.draw(rng);
        base_m = covs * a.tail(static_cast<Eigen::Index>(p));
        base_m.array() += a[0];
        base_y = covs * b.tail(static_cast<Eigen::Index>(p));
        base_y.array() += b[0];
        auto e = effects_for_draw(base_m, a[1], base_y, b[1], b[2], inter ? b[3] : 0.0);
        acme0[k] = e.acme0;
        ade0[k] = e.ade0;
        total[k] = e.total;
        double q = e.acme0 / e.total;
        if (std::isfinite(q)) ratio.push_back(q);
    }

    auto mean = [](const std::vector<double>& v) {
        double sum = 0;
        for (double x : v) sum += x;
        return sum / static_cast<double>(v.size());
    };
    r.acme = mean(acme0);
    r.ade = mean(ade0);
    r.total_effect = mean(total);
    r.ci_low = quantile(acme0, 0.025);
    r.ci_high = quantile(acme0, 0.975);
    r.p_value = simulation_p_value(acme0);
    r.prop_mediated = quantile(ratio, 0.5);
    r.status = MediationStatus::Ok;
    return r;
}

struct BatchConfig {
    Criterion criterion = Criterion::DisjunctiveCause;
    bool lasso = false;
    double alpha = 0.05;
    std::size_t nsim = 1000;
    std::size_t backdoor_limit = 1000;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

inline std::uint64_t hypothesis_seed(std::uint64_t global, const Hypothesis& h) {
    std::uint64_t s = hash_combine(global, h.indication.code);
    s = hash_combine(s, h.drug.code);
    return hash_combine(s, h.outcome.code);
}

/// Covariates kept after LASSO: every non-indicator column, plus the `adj:`
/// columns in the union of the two supports.
inline std::vector<std::string> lasso_filter_covariates(const AnalysisSample& s, std::uint64_t seed, std::size_t folds) {
    if (s.covariate_names.size() < 2) return s.covariate_names;
    auto chosen = lasso::lasso_union_selection(s, seed, std::min(folds, s.n()));
    std::vector<std::string> keep;
    for (const auto& name : s.covariate_names)
        if (name.rfind("adj:", 0) != 0 || chosen.count(name)) keep.push_back(name);
    return keep;
}

/// One hypothesis end to end. Never throws; failures land in status/message.
inline MediationResult mediate_one(const Hypothesis& h, const Cohort& c, const CausalKnowledgeGraph& g, const Dag& causal,
                                   const BatchConfig& cfg) {
    MediationResult r;
    r.hypothesis = h;
    r.criterion = cfg.criterion;
    r.lasso = cfg.lasso;
    r.seed = hypothesis_seed(cfg.seed, h);
    try {
        AdjustmentOptions opt;
        opt.criterion = cfg.criterion;
        opt.backdoor_limit = cfg.backdoor_limit;
        AdjustmentSet adj = find_adjustment(g, causal, h, opt);
        r.adjustment = adj.nodes;
        AnalysisSample s = select_sample(c, g, h, adj);
        // criterion none is the unadjusted analysis: no covariates at all
        std::vector<std::string> covs;
        if (cfg.criterion != Criterion::None) covs = s.covariate_names;
        if (cfg.lasso && !covs.empty()) covs = lasso_filter_covariates(s, hash_combine(r.seed, std::string_view("lasso")), cfg.folds);
        auto est = estimate_acme(s, covs, cfg.nsim, r.seed);
        est.criterion = r.criterion;
        est.lasso = r.lasso;
        est.adjustment = r.adjustment;
        return est;
    } catch (const Error& e) {
        r.message = e.what();
        r.status = (e.code() == Errc::DegenerateSample || e.code() == Errc::EmptySample) ? MediationStatus::Degenerate
                                                                                        : MediationStatus::Na;
    } catch (const std::exception& e) {
        r.message = e.what();
        r.status = MediationStatus::Na;
    }
    return r;
}

/// Applies BH across ok results and assigns the na / insig / pos / neg class.
inline void classify(std::vector<MediationResult>& results, double alpha) {
    std::vector<double> p;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].status == MediationStatus::Ok) {
            p.push_back(results[i].p_value);
            where.push_back(i);
        }
    auto bh = bh_correct(p, alpha);
    for (auto& r : results) r.effect_class = EffectClass::Na;
    for (std::size_t k = 0; k < where.size(); ++k) {
        auto& r = results[where[k]];
        r.p_bh = bh.p_adjusted[k];
        if (!bh.rejected[k]) r.effect_class = EffectClass::Insig;
        else r.effect_class = r.acme > 0 ? EffectClass::Pos : r.acme < 0 ? EffectClass::Neg : EffectClass::Insig;
    }
}

/// Runs every hypothesis on a worker pool. Each hypothesis draws from its own
/// seed, and results are returned in canonical hypothesis order, so output does
/// not depend on `threads`.
inline std::vector<MediationResult> run_mediation_batch(std::vector<Hypothesis> hyps, const Cohort& c,
                                                        const CausalKnowledgeGraph& g, const BatchConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail(Errc::Config, "alpha must lie in (0, 1)");
    std::sort(hyps.begin(), hyps.end());
    hyps.erase(std::unique(hyps.begin(), hyps.end()), hyps.end());
    const Dag causal = g.causal_dag();
    std::vector<MediationResult> results(hyps.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < hyps.size(); i = next++) results[i] = mediate_one(hyps[i], c, g, causal, cfg);
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, hyps.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    classify(results, cfg.alpha);
    return results;
}

} // namespace ckg
