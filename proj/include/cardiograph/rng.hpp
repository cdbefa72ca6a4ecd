#pragma once

#include <cmath>
#include <cstdint>

namespace cardiograph::rng {

// Named substreams: every random decision in the pipeline draws from one of
// these, keyed by (seed, stream, counter), so components are independently
// reproducible and samples can be regenerated in isolation.
inline constexpr std::uint64_t kStimulusStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;
inline constexpr std::uint64_t kInitStream = 3;

// SplitMix64 finalizer; bijective mixer with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the i-th draw is a pure function of
// (seed, stream, counter, i). No hidden platform state, so the bit stream is
// identical across machines and thread schedules.
class Counter {
 public:
  Counter(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
      : base_(mix64(mix64(seed ^ 0xA0761D6478BD642FULL * (stream + 1)) +
                    0xE7037ED1A0B428DBULL * counter)) {}

  std::uint64_t next_u64() { return mix64(base_ + ++idx_ * 0x9E3779B97F4A7C15ULL); }

  // [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller on our own uniforms; std::normal_distribution
  // is avoided because its bit stream is implementation-defined.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n); modulo bias is < 2^-53 for the n used here.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t base_;
  std::uint64_t idx_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cardiograph::rng
