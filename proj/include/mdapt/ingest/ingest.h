#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mdapt::tokenizer {
class Vocabulary;
}

namespace mdapt::ingest {

struct SentenceRecord {
  std::string text;
  std::string lang;
  std::string source;
  std::string doc_id;
  uint64_t sent_id = 0;

  bool operator==(const SentenceRecord&) const = default;
};

// A malformed corpus line. Reading continues past it.
struct ParseIssue {
  size_t line = 0;  // 1-based
  std::string message;
};

struct ReadResult {
  std::vector<SentenceRecord> records;
  std::vector<ParseIssue> errors;
};

// Reads a JSON-lines corpus file (keys: text, lang, source, doc_id, sent_id).
//
// `lang` / `source` fill in missing keys; an empty `lang` means "take it from
// each line". A line whose lang disagrees with a non-empty `lang` is reported
// as malformed. sent_id is renumbered 0,1,2,... per doc_id in file order.
// Throws DataError if the file cannot be opened.
ReadResult read_corpus(const std::filesystem::path& path, std::string_view lang,
                       std::string_view source);

// Same, over in-memory lines.
ReadResult parse_corpus(std::string_view content, std::string_view lang,
                        std::string_view source);

void write_corpus(const std::filesystem::path& path,
                  const std::vector<SentenceRecord>& records);

struct FilterResult {
  bool accepted = false;
  std::string text;
};

// Strips <...> tags, normalises whitespace and rejects text without any
// Unicode letter.
FilterResult filter_sentence(std::string_view text);

// Applies filter_sentence to every record, dropping rejects.
std::vector<SentenceRecord> filter_records(std::vector<SentenceRecord> records);

// Keeps, for each doc_id, only the sentences of the first language that
// doc_id was seen with.
std::vector<SentenceRecord> dedup_documents(
    const std::vector<SentenceRecord>& records);

struct LanguageStats {
  uint64_t sentences = 0;
  uint64_t tokens = 0;

  bool operator==(const LanguageStats&) const = default;
};

struct CorpusStats {
  std::map<std::string, LanguageStats> per_language;
  LanguageStats total;

  bool operator==(const CorpusStats&) const = default;
};

// Token counts are subword pieces, without [CLS]/[SEP]. Throws DataError on a
// record whose language is not in `languages`.
CorpusStats corpus_stats(const std::vector<SentenceRecord>& records,
                         const tokenizer::Vocabulary& vocab,
                         const std::set<std::string>& languages);

}  // namespace mdapt::ingest
