#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace searchplan {

/// SplitMix64 finalizer; used only to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed derived from a run seed and a list of stream coordinates
/// (particle id, field kind, component, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags used with derive_seed.
enum class StreamTag : std::uint64_t {
  kCurrentU = 1,
  kCurrentV = 2,
  kWindU = 3,
  kWindV = 4,
  kLeewayDownwind = 5,
  kLeewayCrosswind = 6,
  kCrosswindSign = 7,
  kPolygonSample = 8,
  kScenario = 9,
};

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(seed, keys));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace searchplan
