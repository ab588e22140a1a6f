#pragma once

#include <cstdint>
#include <random>

namespace arbor {

// Every randomized operation takes one of these explicitly. The engine is
// fully specified by the standard, so streams are portable; the helpers
// below avoid the implementation-defined std:: distributions.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed-splitting rule: child stream `stream` of `master` is
// splitmix64(master ^ splitmix64(stream)). Distinct stream ids give
// statistically independent engines.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t stream) noexcept {
  return splitmix64(master ^ splitmix64(stream));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on [lo, hi); returns lo exactly when lo == hi.
inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer on the closed range [lo, hi].
inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long long>(rng() % span);
}

}  // namespace arbor
