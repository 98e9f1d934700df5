#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace mdapt {

// Seeded generator with platform-stable derived distributions.
//
// The standard distributions are implementation-defined, so everything that
// feeds a manifest hash or a checkpoint goes through the helpers here, which
// only rely on the (standardised) mt19937_64 output sequence.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). n must be > 0.
  uint64_t uniform_index(uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double normal();

  // Normal(0, stddev) resampled until it lies within +-2 stddev.
  double truncated_normal(double stddev);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      const uint64_t j = uniform_index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

  // Child generator for a named stage; independent of how much of this
  // generator has been consumed.
  Rng fork(std::string_view stage) const {
    return Rng(derive_seed(seed_, stage));
  }

  static uint64_t derive_seed(uint64_t seed, std::string_view stage);
  static uint64_t derive_seed(uint64_t seed, uint64_t index);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mdapt
