#pragma once

#include <cstdint>

#include "jir/common.hpp"

namespace jir {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-mode splitmix64: a keyed stream of 64-bit words, one independent
// stream per (seed, trial). Stateless apart from the counter, so trials are
// reproducible regardless of how much randomness each one consumes.
struct TrialRng {
  std::uint64_t key;
  std::uint64_t counter = 0;

  TrialRng(std::uint64_t seed, std::uint64_t trial)
      : key(mix64(seed ^ mix64(trial + 0x51f15eedull))) {}

  std::uint64_t next() { return mix64(key + 0x9e3779b97f4a7c15ull * ++counter); }

  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  // index into a cumulative mass table (strictly increasing tail)
  std::size_t categorical(const Vec& cdf) {
    double u = uniform01();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (u < cdf[mid]) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

inline Vec cumulative(const Vec& p) {
  Vec cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = 1.0;
  return cdf;
}

}  // namespace jir
