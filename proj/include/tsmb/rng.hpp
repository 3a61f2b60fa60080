#pragma once

#include <cstdint>
#include <random>

namespace tsmb {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a stream index:
///   mix_seed(parent, stream) = splitmix64(splitmix64(parent) ^ (stream * 0xD1B54A32D192ED03))
/// Used for master -> fold -> model seed fan-out.
constexpr std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(parent) ^ (stream * 0xD1B54A32D192ED03ULL));
}

}  // namespace tsmb
