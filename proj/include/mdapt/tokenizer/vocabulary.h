#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mdapt::tokenizer {

using TokenId = int32_t;

inline constexpr TokenId kClsId = 0;
inline constexpr TokenId kSepId = 1;
inline constexpr TokenId kMaskId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kPadId = 4;
inline constexpr TokenId kNumSpecialTokens = 5;

inline constexpr std::array<std::string_view, kNumSpecialTokens>
    kSpecialTokens = {"[CLS]", "[SEP]", "[MASK]", "[UNK]", "[PAD]"};

inline constexpr std::string_view kDefaultContinuationPrefix = "##";

// Immutable subword inventory. Ids 0..4 are the special tokens in the order
// of kSpecialTokens.
class Vocabulary {
 public:
  // Throws DataError when tokens are duplicated, empty, or the specials are
  // not the first five entries.
  explicit Vocabulary(
      std::vector<std::string> tokens,
      std::string continuation_prefix = std::string(kDefaultContinuationPrefix));

  // One token per line; line number is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& continuation_prefix() const { return prefix_; }

  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  static bool is_special(TokenId id) { return id >= 0 && id < kNumSpecialTokens; }

  // Copy with `token` appended (no-op if already present).
  Vocabulary with_token(std::string token) const;

 private:
  std::vector<std::string> tokens_;
  std::string prefix_;
  std::unordered_map<std::string, TokenId> index_;
};

// Builds a vocabulary of at most `size` entries from raw sentences: the
// specials, every character seen (word-initial and continuation form), then
// whole words and substrings ranked by frequency * (length - 1).
// Throws DataError on an empty corpus and UsageError when `size` cannot hold
// the specials and the two forms of every character.
Vocabulary build_vocab(const std::vector<std::string>& corpus, size_t size);

}  // namespace mdapt::tokenizer
