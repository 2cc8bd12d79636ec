#pragma once

// Seed derivation for independent random streams.
//
// Every stream is keyed by (master seed, purpose, index) through a SplitMix64
// mix, so the seed of a stream never depends on how many draws other streams
// made or in which order trials were scheduled.

#include <cstdint>
#include <random>

namespace qglms {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint64_t {
    Graph = 1,
    Sampling = 2,
    Signal = 3,
    Noise = 4,
};

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose, std::uint64_t index)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return splitmix64(h ^ index);
}

inline Rng make_stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t index)
{
    return Rng(derive_seed(master, purpose, index));
}

}  // namespace qglms
