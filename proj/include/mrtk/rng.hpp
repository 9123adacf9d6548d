#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "mrtk/core.hpp"

namespace mrtk {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// Counter-based generator: every draw is a pure function of (seed, stream, counter).
// Independent streams derived from the same seed are race-free by construction,
// which is what makes parallel pair generation byte-reproducible at any --jobs N.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x1F123BB5159A55E5ULL))) {}

    std::uint64_t next_u64() {
        return detail::splitmix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (one value per call; pairs are not cached so
    // the draw count stays a simple function of the call count).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Complex circular Gaussian; sigma is the per-component std throughout the toolkit.
    cdouble cnormal(double sigma) { return cdouble(sigma * normal(), sigma * normal()); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Derive a child seed for a named substream (e.g. per pair, per replica).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag = 0) {
    return detail::splitmix64(detail::splitmix64(master ^ (tag * 0xD6E8FEB86659FD93ULL)) + index);
}

}  // namespace mrtk
