#include "mdapt/ingest/ingest.h"

#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "mdapt/common/error.h"
#include "mdapt/common/unicode.h"
#include "mdapt/tokenizer/wordpiece.h"

namespace mdapt::ingest {
namespace {

using nlohmann::json;

std::string string_field(const json& obj, const char* key,
                         std::string_view fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::string(fallback);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
  throw std::invalid_argument(std::string("field '") + key +
                              "' is not a string");
}

}  // namespace

ReadResult parse_corpus(std::string_view content, std::string_view lang,
                        std::string_view source) {
  ReadResult result;
  std::unordered_map<std::string, uint64_t> next_sent_id;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("not a JSON object");
      auto text_it = obj.find("text");
      if (text_it == obj.end() || !text_it->is_string()) {
        throw std::invalid_argument("missing string field 'text'");
      }
      SentenceRecord rec;
      rec.text = text_it->get<std::string>();
      rec.lang = string_field(obj, "lang", lang);
      rec.source = string_field(obj, "source", source);
      rec.doc_id = string_field(obj, "doc_id", "");
      if (rec.lang.empty()) throw std::invalid_argument("missing 'lang'");
      if (!lang.empty() && rec.lang != lang) {
        throw std::invalid_argument("lang '" + rec.lang +
                                    "' does not match expected '" +
                                    std::string(lang) + "'");
      }
      if (rec.doc_id.empty()) throw std::invalid_argument("missing 'doc_id'");
      rec.sent_id = next_sent_id[rec.doc_id]++;
      result.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

ReadResult read_corpus(const std::filesystem::path& path, std::string_view lang,
                       std::string_view source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), lang, source);
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<SentenceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& r : records) {
    json obj = {{"text", r.text},
                {"lang", r.lang},
                {"source", r.source},
                {"doc_id", r.doc_id},
                {"sent_id", r.sent_id}};
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

FilterResult filter_sentence(std::string_view text) {
  static const std::regex kTag("<[^>]*>");
  std::string stripped = std::regex_replace(std::string(text), kTag, "");
  FilterResult result;
  result.text = unicode::normalize_whitespace(stripped);
  result.accepted = !result.text.empty() && unicode::contains_letter(result.text);
  return result;
}

std::vector<SentenceRecord> filter_records(std::vector<SentenceRecord> records) {
  std::vector<SentenceRecord> out;
  out.reserve(records.size());
  for (auto& r : records) {
    FilterResult f = filter_sentence(r.text);
    if (!f.accepted) continue;
    r.text = std::move(f.text);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SentenceRecord> dedup_documents(
    const std::vector<SentenceRecord>& records) {
  std::unordered_map<std::string, std::string> owner;  // doc_id -> lang
  std::vector<SentenceRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto [it, inserted] = owner.try_emplace(r.doc_id, r.lang);
    if (inserted || it->second == r.lang) out.push_back(r);
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<SentenceRecord>& records,
                         const tokenizer::Vocabulary& vocab,
                         const std::set<std::string>& languages) {
  CorpusStats stats;
  for (const auto& lang : languages) stats.per_language[lang];
  for (const auto& r : records) {
    auto it = stats.per_language.find(r.lang);
    if (it == stats.per_language.end()) {
      throw DataError("unregistered language '" + r.lang + "' in doc " +
                      r.doc_id);
    }
    uint64_t pieces = 0;
    for (const auto& word : tokenizer::pre_tokenize(r.text)) {
      pieces += tokenizer::wordpiece(word, vocab).size();
    }
    it->second.sentences += 1;
    it->second.tokens += pieces;
    stats.total.sentences += 1;
    stats.total.tokens += pieces;
  }
  return stats;
}

}  // namespace mdapt::ingest
