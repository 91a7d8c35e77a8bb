#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "yatnn/errors.hpp"

namespace yatnn {

// Counter-based deterministic RNG. A draw sequence is a pure function of
// (seed, counter), so identical state reproduces identical values on every
// platform and streams can be skipped or forked cheaply.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    bool operator==(const RngState&) const = default;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t next_u64(RngState& s) {
    s.counter += 1;
    return detail::mix64(s.seed + s.counter * 0x9E3779B97F4A7C15ULL);
}

// Uniform on [0, 1) with 53-bit resolution.
inline double next_uniform01(RngState& s) {
    return static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly two counter steps.
inline double next_normal(RngState& s) {
    const double u1 = (static_cast<double>(next_u64(s) >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double next_bernoulli(RngState& s, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("bernoulli: p must lie in [0, 1]");
    }
    return next_uniform01(s) < p ? 1.0 : 0.0;
}

enum class RngKind { Uniform01, StandardNormal, Bernoulli };

// Batch draw; the state advances in place. `p` is only read for Bernoulli.
inline std::vector<double> rng_draw(RngState& s, RngKind kind, std::size_t n,
                                    double p = 0.5) {
    if (kind == RngKind::Bernoulli && !(p >= 0.0 && p <= 1.0)) {
        throw DomainError("rng_draw: bernoulli p must lie in [0, 1]");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (kind) {
            case RngKind::Uniform01: out[i] = next_uniform01(s); break;
            case RngKind::StandardNormal: out[i] = next_normal(s); break;
            case RngKind::Bernoulli: out[i] = next_bernoulli(s, p); break;
        }
    }
    return out;
}

}  // namespace yatnn
