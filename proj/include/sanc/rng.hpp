#pragma once

// Counter-based random streams.
//
// Every run of an ensemble owns one stream keyed by (master_seed, run_index):
//   key = mix(mix(master_seed + 0x632be59bd9b4e019) ^ mix(run_index + golden_gamma)).
// Draw k of a stream is a pure function of (key, k): the SplitMix64 finalizer
// applied to key + k * golden_gamma. Uniforms take the top 53 bits; normals
// use the basic Box-Muller transform, consuming two uniforms per pair of
// variates and returning the cosine branch first. Nothing here depends on
// the standard library's distribution implementations, so golden values are
// portable across compilers.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sanc {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit constexpr RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - U lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Independent stream for one member of a seeded ensemble.
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t run_index) {
  const std::uint64_t seed_key = splitmix64_mix(master_seed + 0x632be59bd9b4e019ULL);
  return RngStream(splitmix64_mix(seed_key ^ splitmix64_mix(run_index + kGoldenGamma)));
}

}  // namespace sanc
