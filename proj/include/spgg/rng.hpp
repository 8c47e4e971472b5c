#pragma once

#include <cmath>
#include <cstdint>

namespace spgg {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std engines for
// portability: the stream is identical on every platform and trivially
// splittable into independent child streams keyed by an index.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller. Two uniforms per draw and no cached
  // spare, so the stream position does not depend on earlier draws.
  double gaussian() {
    double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586477 * u2);
  }

  // Stream-split rule: child k of seed s is seeded with mix(s) ^ mix(k+1),
  // mix being the SplitMix64 finalizer. Used one-child-per-sample-index so
  // results are independent of evaluation order.
  static SplitMix64 child(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64(mix(seed) ^ mix(stream + 1));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace spgg
