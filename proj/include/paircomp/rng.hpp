#pragma once

#include <cstdint>

namespace paircomp {

// Counter-based generator: each output is a hash of (key, counter), so the
// sequence is a pure function of (seed, stream) and generators can be split
// per task without coordination. Outputs are recorded next to the seed in
// run summaries to make randomized studies reproducible.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed + kGamma * mix(stream + kGamma))) {}

  std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // Independent stream derived from this generator's key.
  SplitRng split(std::uint64_t stream) const { return SplitRng(key_, mix(stream)); }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace paircomp
