#ifndef GRACE_RANDOM_HPP
#define GRACE_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace grace {

/// The engine used everywhere. Its output sequence is fixed by the standard,
/// so seeded runs are reproducible across toolchains.
using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Derives an independent engine for a named component ("init", "dropout",
/// "kmeans", "sbm") from the single run seed.
inline Rng named_stream(std::uint64_t seed, std::string_view name) {
    return Rng(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a(name))));
}

/// Uniform double in [0, 1) from the top 53 bits. Used instead of
/// std::uniform_real_distribution, whose algorithm is implementation-defined.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

}  // namespace grace

#endif  // GRACE_RANDOM_HPP
