#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dspec {

using Seed = std::uint64_t;

/// SplitMix64 finalizer; used to turn (seed, counter) pairs into independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for the k-th draw of a stream. Deterministic and order-independent,
/// so sample k can be generated on any thread.
constexpr Seed derive_seed(Seed seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Named stream (e.g. "aux", "d_rand") carved out of an experiment seed.
constexpr Seed derive_stream(Seed seed, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ h);
}

using Rng = std::mt19937_64;

}  // namespace dspec
