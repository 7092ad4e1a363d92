#pragma once

#include <cstdint>
#include <random>

namespace cgann {

/// All stochastic code draws from mt19937_64 streams through the helpers
/// below instead of std::uniform_*_distribution, whose output is
/// implementation-defined. This keeps seeded runs bit-identical across
/// standard libraries, which the frozen test values and golden report
/// files rely on.
using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

/// Mixes a parent seed with a stream tag. Chained calls derive
/// per-generation / per-offspring / per-iteration streams from one
/// master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::splitmix64(seed ^ detail::splitmix64(tag));
}

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
    return derive_seed(derive_seed(seed, tag), rest...);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [lo, hi). 53-bit mantissa fill, no distribution object.
inline double uniform_real(Rng& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

/// Uniform integer in [lo, hi] (inclusive), rejection-free Lemire-style
/// mapping; bias is negligible for the small ranges used here and the
/// mapping is identical on every platform.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(span);
    return lo + static_cast<std::int64_t>(wide >> 64);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
}

/// True with probability p.
inline bool chance(Rng& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

} // namespace cgann
