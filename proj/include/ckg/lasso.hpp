#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ckg/error.hpp"
#include "ckg/rng.hpp"
#include "ckg/sample.hpp"

namespace ckg::lasso {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Column centering/scaling. Scale is the population standard deviation; a
/// constant column has scale 0 and is excluded from the fit.
struct Standardization {
    VectorXd mean;
    VectorXd scale;

    static Standardization of(const MatrixXd& X) {
        Standardization s;
        s.mean = X.colwise().mean().transpose();
        s.scale.resize(X.cols());
        for (Index j = 0; j < X.cols(); ++j)
            s.scale[j] = std::sqrt((X.col(j).array() - s.mean[j]).square().mean());
        return s;
    }
};

struct LassoOptions {
    double tolerance = 1e-7; ///< max standardized coefficient change per sweep
    std::size_t max_sweeps = 100000;
    bool polish = true;      ///< exact active-set solve after convergence
};

struct LassoFit {
    double lambda = 0.0;
    double intercept = 0.0;
    VectorXd beta;     ///< original scale
    VectorXd beta_std; ///< standardized scale (what the penalty sees)
    std::size_t sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace; ///< objective after each sweep

    std::size_t support_size() const { return static_cast<std::size_t>((beta_std.array() != 0.0).count()); }
};

/// Sufficient statistics of the standardized, centered problem:
///   G = Z'Z / n, c = Z'(y - ybar) / n, yy = |y - ybar|^2 / n.
/// The objective (1/2n)|y - b0 - Z b|^2 + lambda |b|_1 is then
///   yy/2 - c'b + b'Gb/2 + lambda |b|_1.
class Problem {
public:
    Problem(const MatrixXd& X, const VectorXd& y) {
        if (!X.allFinite() || !y.allFinite()) fail(Errc::NonFinite, "lasso input has non-finite entries");
        if (X.rows() != y.size() || X.rows() == 0) fail(Errc::Domain, "lasso dimension mismatch");
        std_ = Standardization::of(X);
        const double n = static_cast<double>(X.rows());
        ybar_ = y.mean();
        MatrixXd Z = X.rowwise() - std_.mean.transpose();
        for (Index j = 0; j < Z.cols(); ++j) {
            if (std_.scale[j] > 0) Z.col(j) /= std_.scale[j];
            else Z.col(j).setZero();
        }
        VectorXd yc = y.array() - ybar_;
        G_ = Z.transpose() * Z / n;
        c_ = Z.transpose() * yc / n;
        yy_ = yc.squaredNorm() / n;
    }

    Index p() const { return c_.size(); }
    const Standardization& standardization() const { return std_; }
    const MatrixXd& gram() const { return G_; }
    const VectorXd& correlations() const { return c_; }

    /// Smallest lambda with an all-zero solution.
    double lambda_max() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0; }

    double objective(const VectorXd& b, double lambda) const {
        return 0.5 * yy_ - c_.dot(b) + 0.5 * b.dot(G_ * b) + lambda * b.cwiseAbs().sum();
    }

    /// Cyclic coordinate descent with soft-thresholding, warm-started at `b`.
    LassoFit solve(double lambda, VectorXd b, const LassoOptions& opt = {}, bool trace = false) const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(Errc::Domain, "lambda must be finite and >= 0");
        const Index p = c_.size();
        if (b.size() != p) b = VectorXd::Zero(p);
        VectorXd Gb = G_ * b;
        LassoFit fit;
        fit.lambda = lambda;
        for (fit.sweeps = 1; fit.sweeps <= opt.max_sweeps; ++fit.sweeps) {
            double max_change = 0.0;
            for (Index j = 0; j < p; ++j) {
                const double gjj = G_(j, j);
                if (gjj <= 0.0) continue;
                const double z = c_[j] - Gb[j] + gjj * b[j];
                const double next = soft_threshold(z, lambda) / gjj;
                const double delta = next - b[j];
                if (delta != 0.0) {
                    Gb += delta * G_.col(j);
                    b[j] = next;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (trace) fit.objective_trace.push_back(objective(b, lambda));
            if (max_change < opt.tolerance) {
                fit.converged = true;
                break;
            }
        }
        fit.sweeps = std::min(fit.sweeps, opt.max_sweeps);
        if (opt.polish) polish(b, lambda);
        fit.beta_std = b;
        fit.beta.resize(p);
        fit.intercept = ybar_;
        for (Index j = 0; j < p; ++j) {
            fit.beta[j] = std_.scale[j] > 0 ? b[j] / std_.scale[j] : 0.0;
            fit.intercept -= fit.beta[j] * std_.mean[j];
        }
        return fit;
    }

    static double soft_threshold(double z, double lambda) {
        if (z > lambda) return z - lambda;
        if (z < -lambda) return z + lambda;
        return 0.0;
    }

private:
    /// With the active set and signs fixed, the optimum solves
    ///   G_AA b_A = c_A - lambda s_A.
    /// Accept the exact solution only if it keeps the signs and the inactive
    /// coordinates still satisfy |c_j - G_jA b_A| <= lambda.
    void polish(VectorXd& b, double lambda) const {
        std::vector<Index> active;
        for (Index j = 0; j < b.size(); ++j)
            if (b[j] != 0.0) active.push_back(j);
        if (active.empty()) return;
        const auto a = static_cast<Index>(active.size());
        MatrixXd Gaa(a, a);
        VectorXd rhs(a);
        for (Index u = 0; u < a; ++u) {
            rhs[u] = c_[active[u]] - lambda * (b[active[u]] > 0 ? 1.0 : -1.0);
            for (Index v = 0; v < a; ++v) Gaa(u, v) = G_(active[u], active[v]);
        }
        Eigen::LDLT<MatrixXd> ldlt(Gaa);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
        if (ldlt.vectorD().minCoeff() <= 1e-10 * ldlt.vectorD().maxCoeff()) return;
        VectorXd exact = ldlt.solve(rhs);
        if (!exact.allFinite()) return;
        VectorXd candidate = VectorXd::Zero(b.size());
        for (Index u = 0; u < a; ++u) {
            if ((exact[u] > 0) != (b[active[u]] > 0) || exact[u] == 0.0) return;
            candidate[active[u]] = exact[u];
        }
        VectorXd grad = c_ - G_ * candidate;
        for (Index j = 0; j < b.size(); ++j)
            if (candidate[j] == 0.0 && std::abs(grad[j]) > lambda * (1 + 1e-12) + 1e-12) return;
        if (objective(candidate, lambda) <= objective(b, lambda) + 1e-15) b = candidate;
    }

    Standardization std_;
    MatrixXd G_;
    VectorXd c_;
    double yy_ = 0.0;
    double ybar_ = 0.0;
};

/// Minimizes (1/2n) sum (y_i - b0 - x_i'b)^2 + lambda sum |b_j| over the
/// internally standardized design; coefficients are returned on both scales.
inline LassoFit fit_lasso(const MatrixXd& X, const VectorXd& y, double lambda, const LassoOptions& opt = {}) {
    Problem prob(X, y);
    return prob.solve(lambda, VectorXd::Zero(prob.p()), opt);
}

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
inline std::vector<double> lambda_grid(const MatrixXd& X, const VectorXd& y, std::size_t count = 100,
                                       double ratio = 1e-3) {
    const double lmax = Problem(X, y).lambda_max();
    if (lmax <= 0.0 || count == 0) return {0.0};
    if (count == 1) return {lmax};
    std::vector<double> grid(count);
    const double step = std::log(ratio) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) grid[k] = lmax * std::exp(step * static_cast<double>(k));
    grid.front() = lmax;
    return grid;
}

/// Fold label per row: a seeded permutation dealt round-robin.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<std::size_t> fold(n);
    for (std::size_t k = 0; k < n; ++k) fold[perm[k]] = k % folds;
    return fold;
}

struct CvResult {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<double> errors; ///< mean held-out squared error per grid value
};

/// K-fold cross-validation over a descending grid; ties go to the larger lambda.
inline CvResult cross_validate(const MatrixXd& X, const VectorXd& y, std::size_t folds,
                               const std::vector<double>& grid, std::uint64_t seed) {
    if (grid.empty()) fail(Errc::Domain, "empty lambda grid");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] <= grid[k - 1])) fail(Errc::Domain, "lambda grid must be descending");
    const auto n = static_cast<std::size_t>(X.rows());
    if (folds < 2 || n < folds) fail(Errc::Domain, "need 2 <= folds <= n");

    const auto label = fold_assignment(n, folds, seed);
    std::vector<double> sse(grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<Index> train, test;
        for (std::size_t i = 0; i < n; ++i) (label[i] == f ? test : train).push_back(static_cast<Index>(i));
        MatrixXd Xtr(static_cast<Index>(train.size()), X.cols()), Xte(static_cast<Index>(test.size()), X.cols());
        VectorXd ytr(static_cast<Index>(train.size())), yte(static_cast<Index>(test.size()));
        for (std::size_t r = 0; r < train.size(); ++r) {
            Xtr.row(static_cast<Index>(r)) = X.row(train[r]);
            ytr[static_cast<Index>(r)] = y[train[r]];
        }
        for (std::size_t r = 0; r < test.size(); ++r) {
            Xte.row(static_cast<Index>(r)) = X.row(test[r]);
            yte[static_cast<Index>(r)] = y[test[r]];
        }
        Problem prob(Xtr, ytr);
        VectorXd warm = VectorXd::Zero(prob.p());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            LassoFit fit = prob.solve(grid[k], warm);
            warm = fit.beta_std;
            VectorXd pred = (Xte * fit.beta).array() + fit.intercept;
            sse[k] += (yte - pred).squaredNorm();
        }
    }
    CvResult res;
    res.errors.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) res.errors[k] = sse[k] / static_cast<double>(n);
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (res.errors[k] < res.errors[res.index]) res.index = k;
    res.lambda = grid[res.index];
    return res;
}

inline double cv_select_lambda(const MatrixXd& X, const VectorXd& y, std::size_t folds,
                               const std::vector<double>& grid, std::uint64_t seed) {
    return cross_validate(X, y, folds, grid, seed).lambda;
}

/// Names with a non-zero coefficient at the CV-selected lambda.
inline std::set<std::string> selected_names(const MatrixXd& X, const VectorXd& target,
                                            const std::vector<std::string>& names, std::size_t folds,
                                            std::uint64_t seed) {
    auto grid = lambda_grid(X, target);
    double lambda = cv_select_lambda(X, target, folds, grid, seed);
    LassoFit fit = fit_lasso(X, target, lambda);
    std::set<std::string> out;
    for (Index j = 0; j < fit.beta_std.size(); ++j)
        if (fit.beta_std[j] != 0.0) out.insert(names[static_cast<std::size_t>(j)]);
    return out;
}

/// Squared-loss LASSO of T on the covariates and of Y on the covariates; the
/// union of both supports.
inline std::set<std::string> lasso_union_selection(const AnalysisSample& s, std::uint64_t seed = 0,
                                                   std::size_t folds = 10) {
    if (s.covariate_names.size() < 2) fail(Errc::Domain, "LASSO selection needs at least 2 covariates");
    auto constant = [](const VectorXd& v) { return v.size() == 0 || v.minCoeff() == v.maxCoeff(); };
    if (constant(s.t) || constant(s.y)) fail(Errc::DegenerateSample, "T or Y constant in LASSO selection");
    auto a = selected_names(s.covariates, s.t, s.covariate_names, folds, seed);
    auto b = selected_names(s.covariates, s.y, s.covariate_names, folds, hash_combine(seed, 1));
    a.insert(b.begin(), b.end());
    return a;
}

} // namespace ckg::lasso
