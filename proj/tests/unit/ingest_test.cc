#include "doctest.h"

#include <fstream>

#include "mdapt/common/error.h"
#include "mdapt/ingest/ingest.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "temp_dir.h"

using namespace mdapt;
using ingest::SentenceRecord;

TEST_CASE("parse_corpus fills defaults and renumbers sentences per document") {
  const auto r = ingest::parse_corpus(
      "{\"text\":\"a b\",\"doc_id\":\"d1\"}\n"
      "{\"text\":\"c\",\"doc_id\":\"d2\"}\n"
      "{\"text\":\"e\",\"doc_id\":\"d1\"}\n",
      "de", "src");
  REQUIRE(r.errors.empty());
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].lang == "de");
  CHECK(r.records[0].source == "src");
  CHECK(r.records[0].sent_id == 0);
  CHECK(r.records[1].sent_id == 0);
  CHECK(r.records[2].sent_id == 1);
}

TEST_CASE("malformed lines are reported with their line numbers and skipped") {
  const auto r = ingest::parse_corpus(
      "{\"text\":\"ok\",\"lang\":\"de\",\"doc_id\":\"d\"}\n"
      "not json\n"
      "{\"lang\":\"de\"}\n"
      "{\"text\":\"x\",\"lang\":\"fr\",\"doc_id\":\"d\"}\n",
      "de", "s");
  CHECK(r.records.size() == 1);
  REQUIRE(r.errors.size() == 3);
  CHECK(r.errors[0].line == 2);
  CHECK(r.errors[1].line == 3);
  CHECK(r.errors[2].line == 4);
}

TEST_CASE("read_corpus on a missing file is a data error") {
  CHECK_THROWS_AS(ingest::read_corpus("/nonexistent/file.jsonl", "", ""), DataError);
}

TEST_CASE("write_corpus and read_corpus round trip") {
  testing::TempDir dir("ingest");
  std::vector<SentenceRecord> recs{{"Hallo Welt", "de", "s", "d", 0},
                                   {"Zweiter Satz", "de", "s", "d", 1}};
  ingest::write_corpus(dir / "c.jsonl", recs);
  const auto back = ingest::read_corpus(dir / "c.jsonl", "", "");
  CHECK(back.errors.empty());
  CHECK(back.records == recs);
}

TEST_CASE("filter_sentence strips markup and rejects letterless text") {
  const auto a = ingest::filter_sentence("  <b>Hello</b>   world ");
  CHECK(a.accepted);
  CHECK(a.text == "Hello world");
  CHECK_FALSE(ingest::filter_sentence("12 34 !!").accepted);
  CHECK_FALSE(ingest::filter_sentence("<p></p>").accepted);
}

TEST_CASE("dedup_documents keeps a document in its first language only") {
  std::vector<SentenceRecord> recs{{"a", "de", "s", "d1", 0},
                                   {"b", "fr", "s", "d1", 0},
                                   {"c", "fr", "s", "d2", 0},
                                   {"d", "de", "s", "d1", 1}};
  const auto out = ingest::dedup_documents(recs);
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "a");
  CHECK(out[1].text == "c");
  CHECK(out[2].text == "d");
}

TEST_CASE("corpus_stats counts subword pieces per language") {
  const tokenizer::Vocabulary v({"[CLS]", "[SEP]", "[MASK]", "[UNK]", "[PAD]", "ab", "##c", "d"});
  std::vector<SentenceRecord> recs{{"abc d", "de", "s", "x", 0}, {"d", "fr", "s", "y", 0}};
  const auto stats = ingest::corpus_stats(recs, v, {"de", "fr"});
  CHECK(stats.per_language.at("de").sentences == 1);
  CHECK(stats.per_language.at("de").tokens == 3);
  CHECK(stats.per_language.at("fr").tokens == 1);
  CHECK(stats.total.tokens == 4);
  CHECK_THROWS_AS(ingest::corpus_stats(recs, v, {"de"}), DataError);
}
