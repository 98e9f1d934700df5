#include "mdapt/evaluation/metrics.h"

#include <algorithm>
#include <iterator>

#include "mdapt/common/error.h"

namespace mdapt::evaluation {

PrecisionRecallF1 span_micro_f1(std::vector<SpanMention> gold, std::vector<SpanMention> pred) {
  PrecisionRecallF1 out;
  if (gold.empty() && pred.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  std::sort(gold.begin(), gold.end());
  std::sort(pred.begin(), pred.end());
  std::vector<SpanMention> common;
  std::set_intersection(gold.begin(), gold.end(), pred.begin(), pred.end(),
                        std::back_inserter(common));
  out.true_positives = common.size();
  out.false_positives = pred.size() - common.size();
  out.false_negatives = gold.size() - common.size();
  if (!pred.empty()) out.precision = static_cast<double>(common.size()) / pred.size();
  if (!gold.empty()) out.recall = static_cast<double>(common.size()) / gold.size();
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

double sentence_micro_f1(const std::vector<std::string>& gold,
                         const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("sentence_micro_f1: " + std::to_string(gold.size()) + " gold labels vs " +
                    std::to_string(pred.size()) + " predictions");
  }
  if (gold.empty()) return 1.0;
  // With exactly one label per sentence every miss is one FP and one FN, so
  // micro P = R = F1 = correct / total.
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

}  // namespace mdapt::evaluation
