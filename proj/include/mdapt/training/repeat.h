#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

namespace mdapt::training {

struct RepeatResult {
  std::vector<uint64_t> seeds;
  std::vector<double> metrics;  // one per seed, same order
  double mean = 0.0;
  double stddev = 0.0;  // population

  nlohmann::json to_json() const;
};

// Runs `run` once per seed. Throws UsageError for an empty seed list.
RepeatResult repeat_runs(const std::vector<uint64_t>& seeds,
                         const std::function<double(uint64_t seed)>& run);

}  // namespace mdapt::training
