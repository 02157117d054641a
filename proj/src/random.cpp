#include "pbda/random.hpp"

#include <numeric>

namespace pbda {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ fnv1a(stream)) + index);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Explicit Fisher-Yates with our own bounded draw keeps the permutation
    // independent of the standard library's shuffle implementation.
    for (std::size_t i = n; i > 1; --i) {
        std::uint64_t bound = i;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = rng();
        } while (r >= limit);
        std::swap(perm[i - 1], perm[r % bound]);
    }
    return perm;
}

}  // namespace pbda
