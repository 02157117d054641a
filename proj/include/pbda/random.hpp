#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pbda {

using Rng = std::mt19937_64;

/// Seed for a named substream of `seed`. Distinct (stream, index) pairs give
/// statistically independent generators, so e.g. the shuffling stream of a
/// training run never shares state with weight initialization.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace pbda
