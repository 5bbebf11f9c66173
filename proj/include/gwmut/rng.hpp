#pragma once

#include <cstdint>
#include <random>

namespace gwmut {

using Rng = std::mt19937_64;

// Independent stream for replicate `index` of a run seeded with `seed`.
// The stream depends only on (seed, stream tag, index), never on scheduling.
inline Rng substream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      tag, 0x9e3779b9u};
    return Rng(seq);
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform on (0,1), safe for log().
inline double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace gwmut
