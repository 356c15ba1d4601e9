#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "rhythmlab/error.hpp"

namespace rhythmlab {

/// Deterministic random source. Wraps mt19937_64 (whose state and output are
/// fully specified by the standard) and derives all distributions from raw
/// 64-bit draws so that streams are reproducible across platforms and
/// standard libraries. Normal variates use the Box-Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [lo, hi], inclusive, unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw ContractError("uniform_int: empty range");
        const std::uint64_t range =
            static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64()); // full 64-bit span
        const std::uint64_t bound =
            (std::numeric_limits<std::uint64_t>::max() / range) * range;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= bound);
        return lo + static_cast<std::int64_t>(x % range);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller. The sine branch is discarded so the
    /// generator carries no hidden cache state (keeps serialization exact).
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::string state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (is.fail()) throw IoError("rng: unreadable serialized state");
    }

    /// Derives an independent stream seed (splitmix64 finalizer mix).
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace rhythmlab
