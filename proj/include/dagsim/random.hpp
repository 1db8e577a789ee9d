#pragma once

#include <cstdint>
#include <random>

namespace dagsim {

// One engine type everywhere; mt19937_64's output sequence is fixed by the
// standard, so a seed pins the whole run.
using Rng = std::mt19937_64;

// Uniform in [0, 1); consumes exactly one engine output.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_int(Rng& rng, std::uint64_t lo, std::uint64_t hi)
{
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

inline double exponential(Rng& rng, double mean)
{
    return std::exponential_distribution<double>(1.0 / mean)(rng);
}

} // namespace dagsim
