#pragma once

#include <cstdint>

namespace terrafeat {

/// Sub-seeds are derived from the one user seed by hashing (seed, stream)
/// with splitmix64, so every consumer draws from an independent stream.
enum class SeedStream : std::uint64_t {
    ransac = 1,
    split = 2,
    synth = 3,
    probe_init = 4,
    ransac_scoring = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream,
                                    std::uint64_t counter = 0)
{
    return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) << 56)) + counter);
}

} // namespace terrafeat
