#pragma once

#include <cstdint>

namespace doslab {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based draw: the same (seed, key) always yields the same value in
/// [0, 1), using the top 53 bits of the hash.
constexpr double uniform01(std::uint64_t seed, std::uint64_t key) noexcept {
  const std::uint64_t h = mix64(mix64(seed) ^ (key * 0xd1342543de82ef95ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Seed of realization i derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i) noexcept {
  return mix64(master ^ mix64(i + 0x632be59bd9b4e019ULL));
}

}  // namespace doslab
