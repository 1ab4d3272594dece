#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

namespace aca {

// SplitMix64 finalizer; good avalanche, cheap, stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace detail {

inline std::uint64_t seed_word(std::uint64_t v) { return v; }
inline std::uint64_t seed_word(std::int64_t v) { return static_cast<std::uint64_t>(v); }
inline std::uint64_t seed_word(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }
inline std::uint64_t seed_word(double v) { return std::bit_cast<std::uint64_t>(v); }

inline std::uint64_t seed_word(std::string_view s) {
  // FNV-1a; used only for short role tags ("batch", "noise", ...).
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Deterministic seed derivation: folds every argument into the running state.
// Used so that sub-streams (batching vs. noise, per-cell, per-trial) are
// independent and reproducible in isolation.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, Parts... parts) {
  std::uint64_t s = splitmix64(seed);
  ((s = splitmix64(s ^ detail::seed_word(parts))), ...);
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace aca
