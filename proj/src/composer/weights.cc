#include "mdapt/composer/weights.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdapt/common/error.h"

namespace mdapt::composer {

SamplingWeights smooth_weights(const std::map<std::string, uint64_t>& counts,
                               double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw UsageError("smoothing alpha must lie in (0, 1], got " +
                     std::to_string(alpha));
  }
  SamplingWeights w;
  w.alpha = alpha;
  long double total = 0;
  for (const auto& [lang, count] : counts) {
    w.languages.push_back(lang);
    total += count;
  }
  if (total == 0) throw DataError("cannot smooth weights: all counts are zero");

  for (const auto& [lang, count] : counts) {
    w.raw.push_back(static_cast<double>(count / total));
  }
  if (alpha == 1.0) {
    w.smoothed = w.raw;
    return w;
  }
  long double norm = 0;
  std::vector<long double> powered;
  powered.reserve(w.raw.size());
  for (double p : w.raw) {
    powered.push_back(p > 0.0 ? std::pow(static_cast<long double>(p), alpha) : 0.0L);
    norm += powered.back();
  }
  for (long double p : powered) w.smoothed.push_back(static_cast<double>(p / norm));
  return w;
}

std::vector<uint64_t> allocate_largest_remainder(std::span<const double> q,
                                                 uint64_t budget) {
  std::vector<uint64_t> targets(q.size(), 0);
  if (q.empty()) return targets;
  std::vector<long double> remainder(q.size());
  uint64_t assigned = 0;
  for (size_t i = 0; i < q.size(); ++i) {
    const long double exact = static_cast<long double>(budget) * q[i];
    targets[i] = static_cast<uint64_t>(std::floor(exact));
    remainder[i] = exact - targets[i];
    assigned += targets[i];
  }
  // Rounding noise can push the floor sum past the budget by a unit or two.
  while (assigned > budget) {
    const size_t i = static_cast<size_t>(
        std::max_element(targets.begin(), targets.end()) - targets.begin());
    --targets[i];
    remainder[i] += 1;
    --assigned;
  }
  std::vector<size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainder[a] > remainder[b];
  });
  for (size_t k = 0; assigned < budget; k = (k + 1) % order.size()) {
    ++targets[order[k]];
    ++assigned;
  }
  return targets;
}

std::vector<uint64_t> allocate_targets(const SamplingWeights& weights,
                                       uint64_t budget) {
  return allocate_largest_remainder(weights.smoothed, budget);
}

}  // namespace mdapt::composer
