#include "mdapt/training/repeat.h"

#include <cmath>

#include "mdapt/common/error.h"

namespace mdapt::training {

RepeatResult repeat_runs(const std::vector<uint64_t>& seeds,
                         const std::function<double(uint64_t seed)>& run) {
  if (seeds.empty()) throw UsageError("repeat_runs: no seeds");
  RepeatResult out;
  out.seeds = seeds;
  for (uint64_t s : seeds) out.metrics.push_back(run(s));
  double sum = 0.0;
  for (double m : out.metrics) sum += m;
  out.mean = sum / static_cast<double>(out.metrics.size());
  double sq = 0.0;
  for (double m : out.metrics) sq += (m - out.mean) * (m - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(out.metrics.size()));
  return out;
}

nlohmann::json RepeatResult::to_json() const {
  return {{"seeds", seeds}, {"metrics", metrics}, {"mean", mean}, {"stddev", stddev}};
}

}  // namespace mdapt::training
