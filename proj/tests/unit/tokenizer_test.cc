#include "doctest.h"

#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"
#include "mdapt/tokenizer/continued_words.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "mdapt/tokenizer/wordpiece.h"
#include "temp_dir.h"

using namespace mdapt;
using namespace mdapt::tokenizer;

namespace {

Vocabulary make_vocab(std::vector<std::string> extra) {
  std::vector<std::string> t(kSpecialTokens.begin(), kSpecialTokens.end());
  t.insert(t.end(), extra.begin(), extra.end());
  return Vocabulary(t);
}

}  // namespace

TEST_CASE("vocabulary rejects duplicates, empty tokens and misplaced specials") {
  CHECK_THROWS_AS(make_vocab({"a", "a"}), DataError);
  CHECK_THROWS_AS(make_vocab({""}), DataError);
  CHECK_THROWS_AS(Vocabulary({"a", "[CLS]", "[SEP]", "[MASK]", "[UNK]", "[PAD]"}), DataError);
  const auto v = make_vocab({"a"});
  CHECK(v.find("[MASK]") == kMaskId);
  CHECK(v.find("a") == kNumSpecialTokens);
  CHECK_FALSE(v.find("zz").has_value());
}

TEST_CASE("vocabulary save and load round trip") {
  testing::TempDir dir("vocab");
  const auto v = make_vocab({"hund", "##e", "katze"});
  v.save(dir / "v.txt");
  CHECK(Vocabulary::load(dir / "v.txt").tokens() == v.tokens());
}

TEST_CASE("pre_tokenize separates digits and punctuation from letters") {
  CHECK(pre_tokenize("IL-6 levels,rose") ==
        std::vector<std::string>{"IL", "-", "6", "levels", ",", "rose"});
  CHECK(pre_tokenize("  ") .empty());
}

TEST_CASE("wordpiece is greedy longest match first") {
  const auto v = make_vocab({"un", "unaff", "##able", "##aff", "##a", "##ble"});
  CHECK(wordpiece_strings("unaffable", v) == std::vector<std::string>{"unaff", "##able"});
  CHECK(wordpiece("unx", v) == std::vector<TokenId>{kUnkId});
}

TEST_CASE("encode brackets with CLS/SEP and aligns words to first pieces") {
  const auto v = make_vocab({"ab", "##c", "d"});
  const auto s = encode("abc d", v, 16);
  CHECK(s.subtoken_ids.front() == kClsId);
  CHECK(s.subtoken_ids.back() == kSepId);
  CHECK(s.word_to_first_subtoken == std::vector<size_t>{1, 3});
  CHECK(s.continued_flags == std::vector<bool>{true, false});
}

TEST_CASE("encode truncates at the subtoken level keeping words whose first piece fits") {
  const auto v = make_vocab({"ab", "##c", "d"});
  const auto s = encode("abc d abc", v, 5);
  CHECK(s.subtoken_ids.size() <= 5);
  CHECK(s.subtoken_ids.back() == kSepId);
  CHECK(s.words.size() == 2);
  CHECK_THROWS(encode("x", v, 1));
}

TEST_CASE("encode invariants hold on random text") {
  std::vector<std::string> corpus;
  Rng rng(4);
  const std::string letters = "abcdefg";
  for (int i = 0; i < 50; ++i) {
    std::string s;
    for (int w = 0; w < 6; ++w) {
      const auto len = 1 + rng.uniform_index(6);
      for (uint64_t c = 0; c < len; ++c) s += letters[rng.uniform_index(letters.size())];
      s += ' ';
    }
    corpus.push_back(s);
  }
  const auto v = build_vocab(corpus, 80);
  CHECK(v.size() <= 80);
  for (const auto& s : corpus) {
    const auto e = encode(s, v, 20);
    REQUIRE(e.subtoken_ids.front() == kClsId);
    REQUIRE(e.subtoken_ids.back() == kSepId);
    for (size_t i = 1; i < e.word_to_first_subtoken.size(); ++i) {
      REQUIRE(e.word_to_first_subtoken[i] > e.word_to_first_subtoken[i - 1]);
    }
    for (size_t i = 0; i < e.words.size(); ++i) {
      REQUIRE(e.continued_flags[i] == (wordpiece(e.words[i], v).size() >= 2));
    }
  }
}

TEST_CASE("build_vocab covers every character so nothing becomes UNK") {
  const std::vector<std::string> corpus{"xyz zy", "yy q"};
  const auto v = build_vocab(corpus, 40);
  for (const auto& s : corpus) {
    for (auto id : encode(s, v, 64).subtoken_ids) CHECK(id != kUnkId);
  }
  CHECK_THROWS_AS(build_vocab({}, 40), DataError);
  CHECK_THROWS_AS(build_vocab(corpus, 6), UsageError);
}

TEST_CASE("continued-word fraction on hand-computed fixtures") {
  const auto v = make_vocab({"alpha", "beta", "gam", "##ma", "del", "##ta", "eps"});
  CHECK(continued_word_fraction({"alpha beta", "eps"}, v) == 0.0);
  CHECK(continued_word_fraction({"gamma delta"}, v) == 1.0);
  // gamma, delta split; alpha, beta, eps do not: 2 / 5
  CHECK(continued_word_fraction({"alpha gamma beta", "delta eps"}, v) == doctest::Approx(0.4));
  CHECK_THROWS_AS(continued_word_fraction({" "}, v), DataError);
}

TEST_CASE("UNK words count as one piece and punctuation can be excluded") {
  const auto v = make_vocab({"a", "##b"});
  CHECK(continued_word_fraction({"zzz"}, v) == 0.0);
  CHECK(continued_word_fraction({"ab , a"}, v) == doctest::Approx(1.0 / 3));
  CHECK(continued_word_fraction({"ab , a"}, v, {true}) == doctest::Approx(0.5));
}

TEST_CASE("identical vocabularies give zero gaps") {
  const auto v = make_vocab({"a", "##b"});
  const auto g = tokenizer_gap_report(v, v, {"ab a"}, {"ab ab"});
  CHECK(g.delta_general == 0.0);
  CHECK(g.delta_specific == 0.0);
}
