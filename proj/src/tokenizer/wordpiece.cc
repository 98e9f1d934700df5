#include "mdapt/tokenizer/wordpiece.h"

#include <stdexcept>

#include "mdapt/common/unicode.h"

namespace mdapt::tokenizer {
namespace {

enum class CharClass { kAlpha, kDigit, kSymbol };

CharClass classify(char32_t cp) {
  if (unicode::is_digit(cp)) return CharClass::kDigit;
  // Letters and non-decimal numerics (roman numerals, superscripts).
  if (unicode::is_alnum(cp)) return CharClass::kAlpha;
  return CharClass::kSymbol;
}

}  // namespace

std::vector<std::string> pre_tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  CharClass current_class = CharClass::kAlpha;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char32_t cp : unicode::decode_utf8(text)) {
    if (unicode::is_space(cp)) {
      flush();
      continue;
    }
    // Combining marks stay with whatever they follow.
    if (unicode::is_mark(cp) && !current.empty()) {
      unicode::append_utf8(current, cp);
      continue;
    }
    const CharClass cls = unicode::is_mark(cp) ? CharClass::kAlpha : classify(cp);
    if (!current.empty() && cls != current_class) flush();
    current_class = cls;
    unicode::append_utf8(current, cp);
  }
  flush();
  return words;
}

std::vector<TokenId> wordpiece(std::string_view word, const Vocabulary& vocab) {
  const std::u32string cps = unicode::decode_utf8(word);
  if (cps.empty()) return {};
  if (cps.size() > kMaxWordChars) return {kUnkId};

  std::vector<TokenId> pieces;
  size_t start = 0;
  while (start < cps.size()) {
    std::optional<TokenId> match;
    size_t end = cps.size();
    for (; end > start; --end) {
      std::string candidate = unicode::encode_utf8(cps.substr(start, end - start));
      if (start > 0) candidate = vocab.continuation_prefix() + candidate;
      match = vocab.find(candidate);
      if (match) break;
    }
    if (!match) return {kUnkId};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

std::vector<std::string> wordpiece_strings(std::string_view word,
                                           const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : wordpiece(word, vocab)) out.push_back(vocab.token(id));
  return out;
}

TokenizedSentence encode_words(const std::vector<std::string>& words,
                               const Vocabulary& vocab, size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("encode: max_len must be >= 2");
  TokenizedSentence out;
  out.subtoken_ids.push_back(kClsId);
  const size_t limit = max_len - 1;  // room for [SEP]
  for (const auto& word : words) {
    if (out.subtoken_ids.size() >= limit) break;
    const std::vector<TokenId> pieces = wordpiece(word, vocab);
    if (pieces.empty()) continue;
    out.words.push_back(word);
    out.word_to_first_subtoken.push_back(out.subtoken_ids.size());
    out.continued_flags.push_back(pieces.size() >= 2);
    for (TokenId id : pieces) {
      if (out.subtoken_ids.size() >= limit) break;
      out.subtoken_ids.push_back(id);
    }
  }
  out.subtoken_ids.push_back(kSepId);
  return out;
}

TokenizedSentence encode(std::string_view text, const Vocabulary& vocab,
                         size_t max_len) {
  return encode_words(pre_tokenize(text), vocab, max_len);
}

}  // namespace mdapt::tokenizer
