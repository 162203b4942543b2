#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsweep {

// Counter-seeded generator used for all noise injection. Each pixel draws
// from its own stream derived from (seed, view, pixel), so the produced
// rasters do not depend on evaluation order or thread count.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms.
  double next_gaussian() {
    double u1 = next_double_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return g.next();
}

inline uint64_t stream_seed(uint64_t seed, uint64_t view, uint64_t pixel) {
  return hash_mix(hash_mix(seed, view), pixel);
}

}  // namespace rsweep
