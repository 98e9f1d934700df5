#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mdapt/ingest/ingest.h"

namespace mdapt::composer {

enum class Strategy {
  kEd,      // English domain data only
  kMdEd,    // multilingual domain data, filled with English domain data
  kMdMwiki  // multilingual domain data, topped up per language with general data
};

std::string_view strategy_name(Strategy s);  // "ed" | "md-ed" | "md-mwiki"
std::optional<Strategy> parse_strategy(std::string_view name);

// Which language distribution the smoothed weights are computed from.
enum class SmoothingBasis { kDomainCounts, kGeneralCounts };

std::string_view basis_name(SmoothingBasis b);
std::optional<SmoothingBasis> parse_basis(std::string_view name);

enum class PoolKind { kDomainMultilingual, kDomainEnglish, kGeneralMultilingual };

std::string_view pool_name(PoolKind k);  // "domain-multilingual" | ...
std::optional<PoolKind> parse_pool(std::string_view name);

struct Pools {
  std::vector<ingest::SentenceRecord> domain_multilingual;
  std::vector<ingest::SentenceRecord> domain_english;
  std::vector<ingest::SentenceRecord> general_multilingual;

  const std::vector<ingest::SentenceRecord>& get(PoolKind k) const;
  std::vector<ingest::SentenceRecord>& get(PoolKind k);
};

struct CompositionSpec {
  Strategy strategy = Strategy::kMdMwiki;
  uint64_t budget = 10'000'000;
  double alpha = 0.3;
  uint64_t seed = 0;
  SmoothingBasis basis = SmoothingBasis::kDomainCounts;
  std::string english = "en";
};

struct SentenceRef {
  std::string source;
  std::string doc_id;
  uint64_t sent_id = 0;
  std::string lang;
  PoolKind origin = PoolKind::kDomainMultilingual;

  bool operator==(const SentenceRef&) const = default;
};

struct LanguageAllocation {
  uint64_t domain = 0;  // sentences taken from the multilingual domain pool
  uint64_t topup = 0;   // sentences added from the English or general pool
  uint64_t target = 0;  // smoothed target (md-mwiki only)
  double smoothed = 0.0;

  uint64_t total() const { return domain + topup; }
  bool operator==(const LanguageAllocation&) const = default;
};

struct CorpusManifest {
  CompositionSpec spec;
  std::map<std::string, LanguageAllocation> per_language;
  std::vector<SentenceRef> references;
  bool shortfall = false;
  uint64_t missing = 0;  // budget - references.size() when short
  std::string content_hash;
  // Files the pools were read from; informational, not hashed.
  std::map<std::string, std::vector<std::string>> pool_files;
};

// Builds the reference list for one strategy. Sampling is without
// replacement through seeded permutations of each pool sorted by
// (source, doc_id, sent_id), so pool scan order does not matter.
// Throws UsageError for budget == 0 or a missing required pool.
CorpusManifest compose(const CompositionSpec& spec, const Pools& pools);

// Aligned per-language table; header only for an empty manifest.
std::string manifest_report(const CorpusManifest& manifest);

nlohmann::json manifest_to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const nlohmann::json& j);

// Looks each reference up in `pools`. Throws DataError on a dangling ref.
std::vector<ingest::SentenceRecord> resolve_manifest(
    const CorpusManifest& manifest, const Pools& pools);

}  // namespace mdapt::composer
