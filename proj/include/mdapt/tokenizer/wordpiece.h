#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mdapt/tokenizer/vocabulary.h"

namespace mdapt::tokenizer {

// Words longer than this (in code points) map straight to [UNK].
inline constexpr size_t kMaxWordChars = 100;

// Splits at whitespace, then separates maximal runs of digits and maximal
// runs of non-alphanumeric characters from the surrounding letters.
std::vector<std::string> pre_tokenize(std::string_view text);

// Greedy longest-match-first segmentation. A word with an unmatched position
// becomes a single [UNK].
std::vector<TokenId> wordpiece(std::string_view word, const Vocabulary& vocab);
std::vector<std::string> wordpiece_strings(std::string_view word,
                                           const Vocabulary& vocab);

struct TokenizedSentence {
  std::vector<std::string> words;        // words that survived truncation
  std::vector<TokenId> subtoken_ids;     // [CLS] ... [SEP]
  std::vector<size_t> word_to_first_subtoken;
  std::vector<bool> continued_flags;     // word produced >= 2 pieces
};

// [CLS] + pieces + [SEP], truncated at the subtoken level to max_len. A word
// is kept iff its first piece fits. Throws std::invalid_argument if
// max_len < 2.
TokenizedSentence encode(std::string_view text, const Vocabulary& vocab,
                         size_t max_len);

// Pre-split variant used for labelled data.
TokenizedSentence encode_words(const std::vector<std::string>& words,
                               const Vocabulary& vocab, size_t max_len);

}  // namespace mdapt::tokenizer
