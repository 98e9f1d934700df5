#include "mdapt/tokenizer/continued_words.h"

#include "mdapt/common/error.h"
#include "mdapt/common/unicode.h"
#include "mdapt/tokenizer/wordpiece.h"

namespace mdapt::tokenizer {
namespace {

bool is_punctuation_word(const std::string& word) {
  for (char32_t cp : unicode::decode_utf8(word)) {
    if (unicode::is_alnum(cp)) return false;
  }
  return true;
}

}  // namespace

double continued_word_fraction(const std::vector<std::string>& corpus,
                               const Vocabulary& vocab,
                               const ContinuedWordOptions& options) {
  uint64_t words = 0;
  uint64_t continued = 0;
  for (const auto& sentence : corpus) {
    for (const auto& word : pre_tokenize(sentence)) {
      if (options.exclude_punctuation && is_punctuation_word(word)) continue;
      ++words;
      if (wordpiece(word, vocab).size() >= 2) ++continued;
    }
  }
  if (words == 0) throw DataError("continued_word_fraction: corpus has no words");
  return static_cast<double>(continued) / static_cast<double>(words);
}

TokenizerGap tokenizer_gap_report(const Vocabulary& vocab_a,
                                  const Vocabulary& vocab_b,
                                  const std::vector<std::string>& general,
                                  const std::vector<std::string>& specific,
                                  const ContinuedWordOptions& options) {
  TokenizerGap gap;
  gap.a_general = continued_word_fraction(general, vocab_a, options);
  gap.b_general = continued_word_fraction(general, vocab_b, options);
  gap.a_specific = continued_word_fraction(specific, vocab_a, options);
  gap.b_specific = continued_word_fraction(specific, vocab_b, options);
  gap.delta_general = gap.b_general - gap.a_general;
  gap.delta_specific = gap.b_specific - gap.a_specific;
  return gap;
}

}  // namespace mdapt::tokenizer
