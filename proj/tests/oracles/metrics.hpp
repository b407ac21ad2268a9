#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

/// AUC as the fraction of (positive, negative) pairs ordered correctly, ties half.
inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& label) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (label[i] != 1 || label[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    return wins / pairs;
}

/// U for x counted pair by pair.
inline double u_pairs(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0;
    for (double a : x)
        for (double b : y) u += a > b ? 1.0 : a == b ? 0.5 : 0.0;
    return u;
}

/// Exact permutation p-value: every way of choosing which pooled values form
/// x, counting splits at least as far from nx*ny/2 as the observed U.
inline double mwu_exact_p(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t n = pooled.size(), nx = x.size();
    const double centre = static_cast<double>(nx * y.size()) / 2.0;
    const double observed = std::abs(u_pairs(x, y) - centre);
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(nx), true);
    std::size_t extreme = 0, total = 0;
    do {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) (pick[i] ? a : b).push_back(pooled[i]);
        ++total;
        if (std::abs(u_pairs(a, b) - centre) >= observed - 1e-9) ++extreme;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Jaccard on sorted vectors by merging.
inline double jaccard(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<std::string> both, either;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(either));
    return static_cast<double>(both.size()) / static_cast<double>(either.size());
}

} // namespace oracle
