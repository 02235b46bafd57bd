#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sgp {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike the std distributions.
double uniform01(std::mt19937_64& rng);

// Uniform integer in [0, n).
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Mixes a seed with stream coordinates into an independent generator.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace sgp
