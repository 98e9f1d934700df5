#include "mdapt/tokenizer/vocabulary.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "mdapt/common/error.h"
#include "mdapt/common/unicode.h"
#include "mdapt/tokenizer/wordpiece.h"

namespace mdapt::tokenizer {

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       std::string continuation_prefix)
    : tokens_(std::move(tokens)), prefix_(std::move(continuation_prefix)) {
  if (tokens_.size() < kSpecialTokens.size()) {
    throw DataError("vocabulary is missing special tokens");
  }
  for (size_t i = 0; i < kSpecialTokens.size(); ++i) {
    if (tokens_[i] != kSpecialTokens[i]) {
      throw DataError("vocabulary entry " + std::to_string(i) + " must be " +
                      std::string(kSpecialTokens[i]));
    }
  }
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (t.empty()) {
      throw DataError("empty vocabulary entry at id " + std::to_string(i));
    }
    if (!index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary entry '" + t + "'");
    }
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary Vocabulary::with_token(std::string token) const {
  if (contains(token)) return *this;
  auto tokens = tokens_;
  tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens), prefix_);
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, size_t size) {
  constexpr size_t kMaxPieceChars = 16;

  std::map<std::string, uint64_t> word_counts;
  for (const auto& sentence : corpus) {
    for (auto& w : pre_tokenize(sentence)) ++word_counts[std::move(w)];
  }
  if (word_counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  const std::string prefix(kDefaultContinuationPrefix);
  std::set<char32_t> alphabet;
  std::map<std::string, uint64_t> gain;  // candidate -> freq * (len - 1)
  for (const auto& [word, freq] : word_counts) {
    const std::u32string cps = unicode::decode_utf8(word);
    alphabet.insert(cps.begin(), cps.end());
    const size_t n = cps.size();
    for (size_t i = 0; i < n; ++i) {
      const size_t max_end = (i == 0) ? n : std::min(n, i + kMaxPieceChars);
      for (size_t j = i + 2; j <= max_end; ++j) {
        std::string piece = unicode::encode_utf8(cps.substr(i, j - i));
        if (i > 0) piece = prefix + piece;
        gain[piece] += freq * (j - i - 1);
      }
    }
  }

  const size_t required = kSpecialTokens.size() + 2 * alphabet.size();
  if (size < required) {
    throw UsageError("vocabulary size " + std::to_string(size) +
                     " is below the minimum " + std::to_string(required) +
                     " for this corpus");
  }

  std::vector<std::string> tokens(kSpecialTokens.begin(), kSpecialTokens.end());
  for (char32_t c : alphabet) tokens.push_back(unicode::encode_utf8(std::u32string(1, c)));
  for (char32_t c : alphabet) tokens.push_back(prefix + unicode::encode_utf8(std::u32string(1, c)));

  std::vector<std::pair<std::string, uint64_t>> ranked(gain.begin(), gain.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [piece, score] : ranked) {
    if (tokens.size() >= size) break;
    tokens.push_back(piece);
  }
  return Vocabulary(std::move(tokens), prefix);
}

}  // namespace mdapt::tokenizer
