#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ckg/error.hpp"

namespace ckg {

struct BhResult {
    std::vector<double> p_adjusted; ///< input order
    std::vector<bool> rejected;     ///< input order
};

/// Benjamini–Hochberg step-up. Rejects the k smallest p-values where k is the
/// largest rank with p_(k) <= k * alpha / m; adjusted values are the running
/// minimum of m * p_(j) / j from the top, capped at 1.
inline BhResult bh_correct(const std::vector<double>& p, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::Domain, "alpha must lie in (0, 1)");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) fail(Errc::Domain, "p-values must lie in [0, 1]");
    const std::size_t m = p.size();
    BhResult r{std::vector<double>(m, 1.0), std::vector<bool>(m, false)};
    if (m == 0) return r;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    const double md = static_cast<double>(m);
    std::size_t k = 0;
    for (std::size_t rank = 1; rank <= m; ++rank)
        if (p[order[rank - 1]] <= static_cast<double>(rank) * alpha / md) k = rank;
    for (std::size_t rank = 1; rank <= k; ++rank) r.rejected[order[rank - 1]] = true;

    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        running = std::min(running, md * p[order[rank - 1]] / static_cast<double>(rank));
        r.p_adjusted[order[rank - 1]] = std::min(running, 1.0);
    }
    return r;
}

} // namespace ckg
