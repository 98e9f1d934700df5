#include "mdapt/composer/composer.h"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "mdapt/common/error.h"
#include "mdapt/common/hash.h"
#include "mdapt/common/rng.h"
#include "mdapt/composer/weights.h"

namespace mdapt::composer {
namespace {

using ingest::SentenceRecord;
using Key = std::tuple<std::string, std::string, uint64_t>;

Key key_of(const SentenceRecord& r) { return {r.source, r.doc_id, r.sent_id}; }

// Unique records of a pool in canonical order.
std::vector<const SentenceRecord*> canonical(
    const std::vector<SentenceRecord>& pool) {
  std::vector<const SentenceRecord*> out;
  out.reserve(pool.size());
  for (const auto& r : pool) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return key_of(*a) < key_of(*b);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto* a, const auto* b) {
                          return key_of(*a) == key_of(*b);
                        }),
            out.end());
  return out;
}

// Draws from a shuffled pool, skipping anything already in the corpus.
class Drawer {
 public:
  Drawer(std::vector<const SentenceRecord*> records, Rng rng)
      : records_(std::move(records)) {
    rng.shuffle(records_.begin(), records_.end());
  }

  const SentenceRecord* next(const std::set<Key>& used) {
    while (cursor_ < records_.size()) {
      const SentenceRecord* r = records_[cursor_++];
      if (!used.count(key_of(*r))) return r;
    }
    return nullptr;
  }

  uint64_t remaining(const std::set<Key>& used) const {
    uint64_t n = 0;
    for (size_t i = cursor_; i < records_.size(); ++i) {
      if (!used.count(key_of(*records_[i]))) ++n;
    }
    return n;
  }

 private:
  std::vector<const SentenceRecord*> records_;
  size_t cursor_ = 0;
};

class Builder {
 public:
  explicit Builder(CorpusManifest& m) : m_(m) {}

  bool add(const SentenceRecord& r, PoolKind origin) {
    if (!used_.insert(key_of(r)).second) return false;
    m_.references.push_back({r.source, r.doc_id, r.sent_id, r.lang, origin});
    auto& alloc = m_.per_language[r.lang];
    if (origin == PoolKind::kDomainMultilingual) {
      ++alloc.domain;
    } else {
      ++alloc.topup;
    }
    texts_.push_back(&r.text);
    return true;
  }

  // Pulls up to n records from `drawer`; returns how many were added.
  uint64_t take(Drawer& drawer, uint64_t n, PoolKind origin) {
    uint64_t added = 0;
    while (added < n) {
      const SentenceRecord* r = drawer.next(used_);
      if (r == nullptr) break;
      if (add(*r, origin)) ++added;
    }
    return added;
  }

  uint64_t size() const { return m_.references.size(); }
  const std::set<Key>& used() const { return used_; }
  const std::vector<const std::string*>& texts() const { return texts_; }

 private:
  CorpusManifest& m_;
  std::set<Key> used_;
  std::vector<const std::string*> texts_;
};

void include_domain_pool(const CompositionSpec& spec, const Pools& pools,
                         Builder& builder) {
  auto md = canonical(pools.domain_multilingual);
  if (md.size() > spec.budget) {
    Drawer drawer(std::move(md), Rng(spec.seed).fork("md-truncate"));
    builder.take(drawer, spec.budget, PoolKind::kDomainMultilingual);
    return;
  }
  for (const auto* r : md) builder.add(*r, PoolKind::kDomainMultilingual);
}

std::map<std::string, uint64_t> language_counts(
    const std::vector<SentenceRecord>& pool) {
  std::map<std::string, uint64_t> counts;
  for (const auto* r : canonical(pool)) ++counts[r->lang];
  return counts;
}

void compose_md_mwiki(const CompositionSpec& spec, const Pools& pools,
                      CorpusManifest& m, Builder& builder) {
  include_domain_pool(spec, pools, builder);

  std::map<std::string, uint64_t> basis;
  if (spec.basis == SmoothingBasis::kDomainCounts) {
    basis = language_counts(pools.domain_multilingual);
  } else {
    basis = language_counts(pools.general_multilingual);
    if (!basis.count(spec.english) && !pools.domain_english.empty()) {
      basis[spec.english] = canonical(pools.domain_english).size();
    }
  }
  for (const auto& r : pools.general_multilingual) basis.try_emplace(r.lang, 0);
  if (!pools.domain_english.empty()) basis.try_emplace(spec.english, 0);

  const SamplingWeights weights = smooth_weights(basis, spec.alpha);
  const std::vector<uint64_t> targets = allocate_targets(weights, spec.budget);

  // One shuffled top-up source per language: English tops up from the
  // English domain pool, every other language from the general pool.
  std::map<std::string, std::vector<const SentenceRecord*>> by_lang;
  for (const auto* r : canonical(pools.general_multilingual)) {
    if (r->lang != spec.english) by_lang[r->lang].push_back(r);
  }
  by_lang[spec.english] = canonical(pools.domain_english);

  const Rng root(spec.seed);
  std::map<std::string, Drawer> drawers;
  for (const auto& lang : weights.languages) {
    drawers.emplace(lang, Drawer(by_lang[lang], root.fork("topup:" + lang)));
  }
  auto origin_of = [&](const std::string& lang) {
    return lang == spec.english ? PoolKind::kDomainEnglish
                                : PoolKind::kGeneralMultilingual;
  };

  for (size_t i = 0; i < weights.languages.size(); ++i) {
    const auto& lang = weights.languages[i];
    auto& alloc = m.per_language[lang];
    alloc.target = targets[i];
    alloc.smoothed = weights.smoothed[i];
    if (alloc.domain >= targets[i]) continue;
    const uint64_t room = spec.budget - builder.size();
    builder.take(drawers.at(lang), std::min(targets[i] - alloc.domain, room),
                 origin_of(lang));
  }

  // Budget slack (some languages ran dry) goes to the languages that still
  // have top-up data, in proportion to their smoothed weight.
  while (builder.size() < spec.budget) {
    std::vector<size_t> eligible;
    std::vector<double> q;
    double mass = 0.0;
    for (size_t i = 0; i < weights.languages.size(); ++i) {
      const auto& lang = weights.languages[i];
      if (weights.smoothed[i] <= 0.0) continue;
      if (drawers.at(lang).remaining(builder.used()) == 0) continue;
      eligible.push_back(i);
      q.push_back(weights.smoothed[i]);
      mass += weights.smoothed[i];
    }
    if (eligible.empty()) break;
    for (double& x : q) x /= mass;
    const auto extra = allocate_largest_remainder(q, spec.budget - builder.size());
    uint64_t added = 0;
    for (size_t k = 0; k < eligible.size(); ++k) {
      const auto& lang = weights.languages[eligible[k]];
      added += builder.take(drawers.at(lang), extra[k], origin_of(lang));
    }
    if (added == 0) break;
  }
}

std::string content_hash(const CompositionSpec& spec, const CorpusManifest& m,
                         const std::vector<const std::string*>& texts) {
  Sha256 h;
  h.update_field("mdapt-manifest-v1");
  h.update_field(strategy_name(spec.strategy));
  h.update_field(std::to_string(spec.budget));
  std::ostringstream alpha;
  alpha << std::hexfloat << spec.alpha;
  h.update_field(alpha.str());
  h.update_field(std::to_string(spec.seed));
  h.update_field(basis_name(spec.basis));
  h.update_field(spec.english);
  for (size_t i = 0; i < m.references.size(); ++i) {
    const auto& ref = m.references[i];
    h.update_field(ref.source);
    h.update_field(ref.doc_id);
    h.update_field(std::to_string(ref.sent_id));
    h.update_field(ref.lang);
    h.update_field(pool_name(ref.origin));
    h.update_field(*texts[i]);
  }
  return h.hex_digest();
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kEd: return "ed";
    case Strategy::kMdEd: return "md-ed";
    case Strategy::kMdMwiki: return "md-mwiki";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "ed") return Strategy::kEd;
  if (name == "md-ed") return Strategy::kMdEd;
  if (name == "md-mwiki") return Strategy::kMdMwiki;
  return std::nullopt;
}

std::string_view basis_name(SmoothingBasis b) {
  return b == SmoothingBasis::kDomainCounts ? "domain" : "general";
}

std::optional<SmoothingBasis> parse_basis(std::string_view name) {
  if (name == "domain") return SmoothingBasis::kDomainCounts;
  if (name == "general") return SmoothingBasis::kGeneralCounts;
  return std::nullopt;
}

std::string_view pool_name(PoolKind k) {
  switch (k) {
    case PoolKind::kDomainMultilingual: return "domain-multilingual";
    case PoolKind::kDomainEnglish: return "domain-english";
    case PoolKind::kGeneralMultilingual: return "general-multilingual";
  }
  return "?";
}

std::optional<PoolKind> parse_pool(std::string_view name) {
  for (PoolKind k : {PoolKind::kDomainMultilingual, PoolKind::kDomainEnglish,
                     PoolKind::kGeneralMultilingual}) {
    if (pool_name(k) == name) return k;
  }
  return std::nullopt;
}

const std::vector<SentenceRecord>& Pools::get(PoolKind k) const {
  switch (k) {
    case PoolKind::kDomainMultilingual: return domain_multilingual;
    case PoolKind::kDomainEnglish: return domain_english;
    case PoolKind::kGeneralMultilingual: break;
  }
  return general_multilingual;
}

std::vector<SentenceRecord>& Pools::get(PoolKind k) {
  return const_cast<std::vector<SentenceRecord>&>(std::as_const(*this).get(k));
}

CorpusManifest compose(const CompositionSpec& spec, const Pools& pools) {
  if (spec.budget == 0) throw UsageError("compose: budget must be positive");
  CorpusManifest m;
  m.spec = spec;
  Builder builder(m);
  const Rng root(spec.seed);

  switch (spec.strategy) {
    case Strategy::kEd: {
      if (pools.domain_english.empty()) {
        throw UsageError("strategy ed needs a non-empty domain-english pool");
      }
      Drawer drawer(canonical(pools.domain_english), root.fork("ed"));
      builder.take(drawer, spec.budget, PoolKind::kDomainEnglish);
      break;
    }
    case Strategy::kMdEd: {
      if (pools.domain_multilingual.empty()) {
        throw UsageError("strategy md-ed needs a non-empty domain-multilingual pool");
      }
      include_domain_pool(spec, pools, builder);
      Drawer drawer(canonical(pools.domain_english), root.fork("ed-fill"));
      builder.take(drawer, spec.budget - builder.size(), PoolKind::kDomainEnglish);
      break;
    }
    case Strategy::kMdMwiki: {
      if (pools.domain_multilingual.empty()) {
        throw UsageError("strategy md-mwiki needs a non-empty domain-multilingual pool");
      }
      compose_md_mwiki(spec, pools, m, builder);
      break;
    }
  }

  m.shortfall = builder.size() < spec.budget;
  m.missing = spec.budget - builder.size();
  m.content_hash = content_hash(spec, m, builder.texts());
  return m;
}

std::string manifest_report(const CorpusManifest& manifest) {
  std::ostringstream out;
  auto row = [&](const std::string& lang, uint64_t domain, uint64_t topup,
                 uint64_t total) {
    out << std::left << std::setw(8) << lang << std::right << std::setw(12)
        << domain << std::setw(12) << topup << std::setw(12) << total << '\n';
  };
  out << std::left << std::setw(8) << "lang" << std::right << std::setw(12)
      << "domain" << std::setw(12) << "topup" << std::setw(12) << "total"
      << '\n';
  uint64_t domain = 0;
  uint64_t topup = 0;
  size_t rows = 0;
  for (const auto& [lang, alloc] : manifest.per_language) {
    if (alloc.total() == 0) continue;
    row(lang, alloc.domain, alloc.topup, alloc.total());
    domain += alloc.domain;
    topup += alloc.topup;
    ++rows;
  }
  if (rows > 0) row("total", domain, topup, domain + topup);
  return out.str();
}

nlohmann::json manifest_to_json(const CorpusManifest& m) {
  using nlohmann::json;
  json langs = json::object();
  for (const auto& [lang, a] : m.per_language) {
    langs[lang] = {{"domain", a.domain},
                   {"topup", a.topup},
                   {"total", a.total()},
                   {"target", a.target},
                   {"smoothed", a.smoothed}};
  }
  json refs = json::array();
  for (const auto& r : m.references) {
    refs.push_back(json::array({r.source, r.doc_id, r.sent_id, r.lang,
                                pool_name(r.origin)}));
  }
  return json{
      {"format_version", 1},
      {"spec",
       {{"strategy", strategy_name(m.spec.strategy)},
        {"budget", m.spec.budget},
        {"alpha", m.spec.alpha},
        {"seed", m.spec.seed},
        {"basis", basis_name(m.spec.basis)},
        {"english", m.spec.english}}},
      {"languages", langs},
      {"total", m.references.size()},
      {"shortfall", m.shortfall},
      {"missing", m.missing},
      {"content_hash", m.content_hash},
      {"pools", m.pool_files},
      {"references", refs},
  };
}

CorpusManifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw DataError("unsupported manifest format_version");
    }
    CorpusManifest m;
    const auto& s = j.at("spec");
    auto strategy = parse_strategy(s.at("strategy").get<std::string>());
    auto basis = parse_basis(s.at("basis").get<std::string>());
    if (!strategy || !basis) throw DataError("manifest: bad strategy or basis");
    m.spec.strategy = *strategy;
    m.spec.basis = *basis;
    m.spec.budget = s.at("budget").get<uint64_t>();
    m.spec.alpha = s.at("alpha").get<double>();
    m.spec.seed = s.at("seed").get<uint64_t>();
    m.spec.english = s.at("english").get<std::string>();
    for (const auto& [lang, a] : j.at("languages").items()) {
      LanguageAllocation alloc;
      alloc.domain = a.at("domain").get<uint64_t>();
      alloc.topup = a.at("topup").get<uint64_t>();
      alloc.target = a.at("target").get<uint64_t>();
      alloc.smoothed = a.at("smoothed").get<double>();
      m.per_language[lang] = alloc;
    }
    for (const auto& r : j.at("references")) {
      auto origin = parse_pool(r.at(4).get<std::string>());
      if (!origin) throw DataError("manifest: bad reference origin");
      m.references.push_back({r.at(0).get<std::string>(),
                              r.at(1).get<std::string>(),
                              r.at(2).get<uint64_t>(),
                              r.at(3).get<std::string>(), *origin});
    }
    m.shortfall = j.at("shortfall").get<bool>();
    m.missing = j.at("missing").get<uint64_t>();
    m.content_hash = j.at("content_hash").get<std::string>();
    m.pool_files = j.at("pools").get<std::map<std::string, std::vector<std::string>>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<SentenceRecord> resolve_manifest(const CorpusManifest& manifest,
                                             const Pools& pools) {
  std::map<Key, const SentenceRecord*> index;
  for (PoolKind k : {PoolKind::kDomainMultilingual, PoolKind::kDomainEnglish,
                     PoolKind::kGeneralMultilingual}) {
    for (const auto& r : pools.get(k)) index.try_emplace(key_of(r), &r);
  }
  std::vector<SentenceRecord> out;
  out.reserve(manifest.references.size());
  for (const auto& ref : manifest.references) {
    auto it = index.find({ref.source, ref.doc_id, ref.sent_id});
    if (it == index.end()) {
      throw DataError("manifest reference not found in pools: " + ref.source +
                      "/" + ref.doc_id + "/" + std::to_string(ref.sent_id));
    }
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace mdapt::composer
