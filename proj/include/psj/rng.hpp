#pragma once

#include <cstdint>
#include <random>

namespace psj {

using Engine = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds from a base
/// seed and a tag so that parallel chunks stay reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t tag = 0) {
  return Engine(mix_seed(seed, tag));
}

inline double uniform01(Engine& eng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

}  // namespace psj
