#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/ingest/ingest.h"
#include "mdapt/training/classify.h"
#include "mdapt/training/ner.h"

namespace mdapt::cli {

// Desk-scale stand-in for the real corpora.
//
// Every language renders the same concepts with its own pseudo-words, and
// every concept has a digit "anchor" token shared by all languages that
// sometimes follows it. Concepts are grouped into topics. Two domains
// ("target" and "other") each own a marker vocabulary, shared across
// languages, disjoint from each other and from the concept words, and split
// into entity classes. In running domain text, each class keeps to its own
// topics and a marker usually follows its class's trigger word.
struct SyntheticSpec {
  int num_languages = 3;
  int words_per_language = 96;  // concepts, excluding trigger words
  int num_topics = 24;
  int entity_classes = 2;       // per domain
  int markers_per_class = 12;   // half for NER training, half for dev/test
  int sentences_per_language_domain = 400;
  int general_sentences_per_language = 600;
  int heldout_sentences_per_domain = 200;
  int parallel_pairs = 200;
  int ner_train_sentences = 300;
  int ner_eval_sentences = 100;  // each of dev and test
  int classification_sentences = 300;
  uint64_t seed = 0;

  void validate() const;  // throws UsageError
};

nlohmann::json to_json(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

// Relative layout of a generated fixture directory.
struct FixtureLayout {
  std::filesystem::path root;

  std::filesystem::path pool(const std::string& domain, const std::string& kind) const;
  std::filesystem::path general_pool() const { return root / "pools" / "general-multilingual"; }
  std::filesystem::path heldout(const std::string& domain) const {
    return root / "heldout" / (domain + ".jsonl");
  }
  std::filesystem::path ner(const std::string& split) const {
    return root / "ner" / (split + ".conll");
  }
  std::filesystem::path classification() const { return root / "clf" / "data.jsonl"; }
  std::filesystem::path retrieval_sources() const { return root / "retrieval" / "source.jsonl"; }
  std::filesystem::path retrieval_targets() const { return root / "retrieval" / "target.jsonl"; }
  std::filesystem::path alignment() const { return root / "retrieval" / "alignment.tsv"; }
};

inline const char* const kTargetDomain = "target";
inline const char* const kOtherDomain = "other";

std::vector<std::string> fixture_languages(int count);  // "en" first

// Writes the fixture to `out`; deterministic in the spec. Throws DataError
// when a file cannot be written.
FixtureLayout generate_fixtures(const SyntheticSpec& spec, const std::filesystem::path& out);

// SHA-256 over sorted relative paths and file contents.
std::string directory_hash(const std::filesystem::path& dir);

// Reads every <lang>.jsonl below `dir` (language taken from the file name).
std::vector<ingest::SentenceRecord> read_pool_dir(const std::filesystem::path& dir);

struct RetrievalSentence {
  std::string id;
  std::string text;
};
std::vector<RetrievalSentence> read_retrieval_sentences(const std::filesystem::path& path);

}  // namespace mdapt::cli
