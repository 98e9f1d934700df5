#pragma once

#include <string>
#include <vector>

#include "mdapt/evaluation/bio.h"

namespace mdapt::evaluation {

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t true_positives = 0;
  size_t false_positives = 0;
  size_t false_negatives = 0;
};

// Exact match on (sentence, start, end, label), pooled over labels.
// Both sides empty scores 1/1/1.
PrecisionRecallF1 span_micro_f1(std::vector<SpanMention> gold, std::vector<SpanMention> pred);

// Micro-F1 over single-label sentences, which equals accuracy. Throws
// DataError on a length mismatch; an empty pair of lists scores 1.
double sentence_micro_f1(const std::vector<std::string>& gold,
                         const std::vector<std::string>& pred);

}  // namespace mdapt::evaluation
