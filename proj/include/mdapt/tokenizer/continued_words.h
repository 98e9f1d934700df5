#pragma once

#include <string>
#include <vector>

#include "mdapt/tokenizer/vocabulary.h"

namespace mdapt::tokenizer {

struct ContinuedWordOptions {
  // Skip words with neither a letter nor a digit.
  bool exclude_punctuation = false;
};

// Fraction of pre-tokenized words split into two or more pieces. [UNK] words
// count as a single piece. Throws DataError when the corpus has no words.
double continued_word_fraction(const std::vector<std::string>& corpus,
                               const Vocabulary& vocab,
                               const ContinuedWordOptions& options = {});

struct TokenizerGap {
  double a_general = 0.0;
  double b_general = 0.0;
  double a_specific = 0.0;
  double b_specific = 0.0;
  double delta_general = 0.0;   // b_general - a_general
  double delta_specific = 0.0;  // b_specific - a_specific
};

TokenizerGap tokenizer_gap_report(const Vocabulary& vocab_a,
                                  const Vocabulary& vocab_b,
                                  const std::vector<std::string>& general,
                                  const std::vector<std::string>& specific,
                                  const ContinuedWordOptions& options = {});

}  // namespace mdapt::tokenizer
