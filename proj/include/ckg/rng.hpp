#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ckg/hash.hpp"

namespace ckg {

/// Seeded generator with distribution code written out here rather than taken
/// from <random>, whose distributions are implementation-defined. Output is a
/// pure function of the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent substream, e.g. one per person or per hypothesis.
    static Rng stream(std::uint64_t seed, std::uint64_t index) { return Rng(hash_combine(seed, index)); }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal (Marsaglia polar method).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Number of failures before the first success, support {0, 1, ...}.
    std::int64_t geometric(double p) {
        if (p >= 1.0) return 0;
        return static_cast<std::int64_t>(std::floor(std::log(uniform_open()) / std::log1p(-p)));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ckg
