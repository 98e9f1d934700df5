#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mdapt::composer {

struct SamplingWeights {
  std::vector<std::string> languages;  // ascending code order
  std::vector<double> raw;             // P(L)
  std::vector<double> smoothed;        // P(L)^alpha, renormalised
  double alpha = 1.0;
};

// Exponentially smoothed language weights. Throws UsageError for alpha
// outside (0, 1] and DataError when every count is zero.
SamplingWeights smooth_weights(const std::map<std::string, uint64_t>& counts,
                               double alpha);

// floor(budget * q_i) plus one extra unit to the largest remainders until the
// total is exactly `budget`; equal remainders go to the lower index first.
std::vector<uint64_t> allocate_largest_remainder(std::span<const double> q,
                                                 uint64_t budget);

// allocate_largest_remainder over weights.smoothed.
std::vector<uint64_t> allocate_targets(const SamplingWeights& weights,
                                       uint64_t budget);

}  // namespace mdapt::composer
