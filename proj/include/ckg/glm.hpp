#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ckg/error.hpp"

namespace ckg::glm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class RankPolicy { Drop, Throw };

/// Coefficients are ordered intercept first, then the kept columns of X in
/// their input order. Columns dropped for collinearity are listed by name.
struct FitResult {
    VectorXd coefficients;
    MatrixXd covariance; ///< HC1 sandwich
    std::vector<std::string> names;
    std::vector<std::size_t> kept; ///< indices into the X columns
    std::vector<std::string> dropped;
    bool converged = false;
    bool separation = false;
    std::size_t iterations = 0;
    double log_likelihood = 0.0;
    double rss = 0.0;

    std::optional<std::size_t> position(std::size_t column) const {
        for (std::size_t k = 0; k < kept.size(); ++k)
            if (kept[k] == column) return k + 1;
        return std::nullopt;
    }

    /// Coefficient for input column `column` (0 if it was dropped).
    double coef(std::size_t column) const {
        auto k = position(column);
        return k ? coefficients[static_cast<Index>(*k)] : 0.0;
    }

    double std_error(std::size_t column) const {
        auto k = position(column);
        return k ? std::sqrt(covariance(static_cast<Index>(*k), static_cast<Index>(*k))) : 0.0;
    }

    /// Coefficient vector aligned with [1, X] including zeros for dropped columns.
    VectorXd full_coefficients(std::size_t p) const {
        VectorXd b = VectorXd::Zero(static_cast<Index>(p + 1));
        b[0] = coefficients[0];
        for (std::size_t k = 0; k < kept.size(); ++k) b[static_cast<Index>(kept[k] + 1)] = coefficients[static_cast<Index>(k + 1)];
        return b;
    }

    /// Covariance aligned with [1, X]; rows/cols of dropped columns are zero.
    MatrixXd full_covariance(std::size_t p) const {
        MatrixXd v = MatrixXd::Zero(static_cast<Index>(p + 1), static_cast<Index>(p + 1));
        std::vector<Index> map{0};
        for (std::size_t c : kept) map.push_back(static_cast<Index>(c + 1));
        for (std::size_t a = 0; a < map.size(); ++a)
            for (std::size_t b = 0; b < map.size(); ++b)
                v(map[a], map[b]) = covariance(static_cast<Index>(a), static_cast<Index>(b));
        return v;
    }
};

namespace detail {

inline std::vector<std::string> default_names(Index p) {
    std::vector<std::string> n;
    for (Index j = 0; j < p; ++j) n.push_back("x" + std::to_string(j + 1));
    return n;
}

inline void check_finite(const MatrixXd& X, const VectorXd& y) {
    if (!X.allFinite() || !y.allFinite()) fail(Errc::NonFinite, "design or response has non-finite entries");
    if (X.rows() != y.size()) fail(Errc::Domain, "X has " + std::to_string(X.rows()) + " rows, y has " + std::to_string(y.size()));
}

/// Greedy column selection: a column is kept if it is not (numerically) in the
/// span of the intercept and the columns kept before it.
inline std::vector<std::size_t> independent_columns(const MatrixXd& X, const std::vector<std::string>& names,
                                                    RankPolicy policy, std::vector<std::string>& dropped) {
    const Index n = X.rows();
    std::vector<VectorXd> basis;
    basis.push_back(VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
    std::vector<std::size_t> kept;
    for (Index j = 0; j < X.cols(); ++j) {
        VectorXd v = X.col(j);
        double norm0 = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) v -= q.dot(v) * q;
        double norm1 = v.norm();
        if (norm0 == 0.0 || norm1 <= 1e-9 * norm0) {
            dropped.push_back(names[static_cast<std::size_t>(j)]);
            continue;
        }
        basis.push_back(v / norm1);
        kept.push_back(static_cast<std::size_t>(j));
    }
    if (policy == RankPolicy::Throw && !dropped.empty()) {
        std::string list;
        for (const auto& d : dropped) list += (list.empty() ? "" : ", ") + d;
        fail(Errc::RankDeficient, "collinear columns: " + list);
    }
    return kept;
}

inline MatrixXd with_intercept(const MatrixXd& X, const std::vector<std::size_t>& kept) {
    MatrixXd A(X.rows(), static_cast<Index>(kept.size() + 1));
    A.col(0).setOnes();
    for (std::size_t k = 0; k < kept.size(); ++k) A.col(static_cast<Index>(k + 1)) = X.col(static_cast<Index>(kept[k]));
    return A;
}

/// bread · meat · bread scaled by n/(n-k); HC0 scaling when n <= k.
inline MatrixXd hc1(const MatrixXd& bread, const MatrixXd& A, const VectorXd& resid) {
    const double n = static_cast<double>(A.rows());
    const double k = static_cast<double>(A.cols());
    MatrixXd scores = A.array().colwise() * resid.array();
    MatrixXd meat = scores.transpose() * scores;
    MatrixXd v = bread * meat * bread;
    if (n > k) v *= n / (n - k);
    return 0.5 * (v + v.transpose());
}

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace detail

/// Least squares with intercept and HC1 covariance.
inline FitResult fit_ols(const MatrixXd& X, const VectorXd& y, std::vector<std::string> names = {},
                         RankPolicy policy = RankPolicy::Drop) {
    detail::check_finite(X, y);
    if (y.size() < 1) fail(Errc::Domain, "fit_ols needs at least one row");
    if (names.empty()) names = detail::default_names(X.cols());
    FitResult r;
    r.kept = detail::independent_columns(X, names, policy, r.dropped);
    MatrixXd A = detail::with_intercept(X, r.kept);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
    r.coefficients = qr.solve(y);
    VectorXd resid = y - A * r.coefficients;
    r.rss = resid.squaredNorm();
    MatrixXd bread = (A.transpose() * A).ldlt().solve(MatrixXd::Identity(A.cols(), A.cols()));
    r.covariance = detail::hc1(bread, A, resid);
    r.names.push_back("(intercept)");
    for (std::size_t c : r.kept) r.names.push_back(names[c]);
    r.converged = true;
    r.iterations = 1;
    return r;
}

struct LogisticOptions {
    std::size_t max_iterations = 100;
    double tolerance = 1e-8;
    double ridge = 0.0;                 ///< L2 penalty on slopes (stabilized retry)
    double separation_threshold = 15.0; ///< on |beta_j| * sd(x_j)
};

/// Bernoulli maximum likelihood by IRLS (Newton) with step halving.
/// Separation is flagged (converged = false) rather than thrown.
inline FitResult fit_logistic(const MatrixXd& X, const VectorXd& y, std::vector<std::string> names = {},
                              const LogisticOptions& opt = {}, RankPolicy policy = RankPolicy::Drop) {
    detail::check_finite(X, y);
    for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) fail(Errc::Domain, "logistic response must be 0/1");
    const double ybar = y.size() ? y.mean() : 0.0;
    if (y.size() == 0 || ybar == 0.0 || ybar == 1.0) fail(Errc::DegenerateOutcome, "response has no variation");
    if (names.empty()) names = detail::default_names(X.cols());

    FitResult r;
    r.kept = detail::independent_columns(X, names, policy, r.dropped);
    MatrixXd A = detail::with_intercept(X, r.kept);
    const Index k = A.cols();
    VectorXd sd(k);
    sd[0] = 0.0;
    for (Index j = 1; j < k; ++j) {
        double mu = A.col(j).mean();
        sd[j] = std::sqrt((A.col(j).array() - mu).square().mean());
    }
    VectorXd penalty = VectorXd::Constant(k, opt.ridge);
    penalty[0] = 0.0;

    auto loglik = [&](const VectorXd& b) {
        VectorXd eta = A * b;
        double ll = 0.0;
        for (Index i = 0; i < eta.size(); ++i) {
            double e = eta[i];
            // log(1 + exp(e)) computed stably
            double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
            ll += y[i] * e - softplus;
        }
        return ll - 0.5 * (penalty.array() * b.array().square()).sum();
    };

    VectorXd beta = VectorXd::Zero(k);
    beta[0] = std::log(ybar / (1.0 - ybar));
    double ll = loglik(beta);
    VectorXd p(A.rows());
    for (r.iterations = 1; r.iterations <= opt.max_iterations; ++r.iterations) {
        VectorXd eta = A * beta;
        for (Index i = 0; i < eta.size(); ++i) p[i] = detail::sigmoid(eta[i]);
        VectorXd w = (p.array() * (1.0 - p.array())).max(1e-12);
        VectorXd grad = A.transpose() * (y - p) - penalty.cwiseProduct(beta);
        MatrixXd H = A.transpose() * (A.array().colwise() * w.array()).matrix();
        H.diagonal() += penalty;
        VectorXd step = H.ldlt().solve(grad);
        if (!step.allFinite()) break;
        double scale = 1.0;
        VectorXd next = beta + step;
        double ll_next = loglik(next);
        while (ll_next < ll - 1e-12 * std::abs(ll) && scale > 1e-6) {
            scale *= 0.5;
            next = beta + scale * step;
            ll_next = loglik(next);
        }
        double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        ll = ll_next;
        for (Index j = 1; j < k; ++j) {
            if (std::abs(beta[j]) * sd[j] > opt.separation_threshold) r.separation = true;
        }
        if (r.separation) break;
        if (change < opt.tolerance) {
            r.converged = true;
            break;
        }
    }
    if (r.iterations > opt.max_iterations) r.iterations = opt.max_iterations;

    VectorXd eta = A * beta;
    for (Index i = 0; i < eta.size(); ++i) p[i] = detail::sigmoid(eta[i]);
    VectorXd w = (p.array() * (1.0 - p.array())).max(1e-300);
    MatrixXd H = A.transpose() * (A.array().colwise() * w.array()).matrix();
    H.diagonal() += penalty;
    MatrixXd bread = H.ldlt().solve(MatrixXd::Identity(k, k));
    r.coefficients = beta;
    r.covariance = detail::hc1(bread, A, y - p);
    r.log_likelihood = loglik(beta);
    r.names.push_back("(intercept)");
    for (std::size_t c : r.kept) r.names.push_back(names[c]);
    if (!r.coefficients.allFinite() || !r.covariance.allFinite()) r.converged = false;
    return r;
}

/// Score vector X'(y - p) of the unpenalized likelihood at `beta` (aligned with [1, X]).
inline VectorXd logistic_score(const MatrixXd& X, const VectorXd& y, const VectorXd& beta) {
    MatrixXd A(X.rows(), X.cols() + 1);
    A.col(0).setOnes();
    A.rightCols(X.cols()) = X;
    VectorXd eta = A * beta;
    VectorXd p(eta.size());
    for (Index i = 0; i < eta.size(); ++i) p[i] = detail::sigmoid(eta[i]);
    return A.transpose() * (y - p);
}

/// Two-sided Wald p-value.
inline double wald_p(double estimate, double se) {
    if (!(se > 0.0)) return 1.0;
    return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

} // namespace ckg::glm
