#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace ckd {

using Rng = std::mt19937_64;

// Random streams are keyed by a tuple (seed, a, b, ...) through std::seed_seq,
// whose output is fully specified by the standard. The samplers below are
// written out by hand for the same reason: std::*_distribution results vary
// between standard library implementations.
Rng make_stream(std::initializer_list<std::uint64_t> key);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Uniform integer in [0, bound). bound must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

/// Standard normal via Box-Muller (one value per call).
double standard_normal(Rng& rng);

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace ckd
