#include "doctest.h"

#include <cmath>
#include <set>
#include <tuple>

#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"
#include "mdapt/composer/composer.h"
#include "mdapt/composer/weights.h"
#include "oracles.h"

using namespace mdapt;
using namespace mdapt::composer;
using ingest::SentenceRecord;

namespace {

std::map<std::string, uint64_t> random_counts(Rng& rng) {
  std::map<std::string, uint64_t> counts;
  const auto n = 2 + rng.uniform_index(19);
  for (uint64_t i = 0; i < n; ++i) {
    counts["l" + std::to_string(100 + i)] = 1 + rng.uniform_index(1'000'000);
  }
  return counts;
}

std::vector<SentenceRecord> pool(const std::string& source, const std::map<std::string, int>& sizes) {
  std::vector<SentenceRecord> out;
  for (const auto& [lang, n] : sizes) {
    for (int i = 0; i < n; ++i) {
      out.push_back({source + " " + lang + " sentence " + std::to_string(i), lang, source,
                     lang + "-doc" + std::to_string(i / 5), static_cast<uint64_t>(i % 5)});
    }
  }
  return out;
}

Pools fixture_pools() {
  return {pool("md", {{"de", 300}, {"fr", 40}, {"es", 20}}), pool("ed", {{"en", 500}}),
          pool("wiki", {{"de", 200}, {"fr", 200}, {"es", 200}, {"en", 200}})};
}

}  // namespace

TEST_CASE("smoothed weights match the brute-force oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto counts = random_counts(rng);
    const double alpha = 0.05 + 0.95 * rng.uniform01();
    const auto w = smooth_weights(counts, alpha);
    const auto expect = oracle::smoothed_weights(counts, alpha);
    REQUIRE(w.smoothed.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(w.smoothed[i] - expect[i]) < 1e-9);
  }
}

TEST_CASE("alpha = 1 returns the raw weights") {
  const std::map<std::string, uint64_t> counts{{"de", 7}, {"en", 3}, {"fr", 11}};
  const auto w = smooth_weights(counts, 1.0);
  CHECK(w.smoothed == w.raw);
  CHECK(w.languages == std::vector<std::string>{"de", "en", "fr"});
}

TEST_CASE("smoothing is scale invariant and flattens non-uniform inputs") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto counts = random_counts(rng);
    auto scaled = counts;
    for (auto& [k, v] : scaled) v *= 7;
    const auto a = smooth_weights(counts, 0.3);
    const auto b = smooth_weights(scaled, 0.3);
    for (size_t i = 0; i < a.smoothed.size(); ++i) CHECK(std::abs(a.smoothed[i] - b.smoothed[i]) < 1e-12);
    const double raw_max = *std::max_element(a.raw.begin(), a.raw.end());
    const double raw_min = *std::min_element(a.raw.begin(), a.raw.end());
    if (raw_max > raw_min) {
      CHECK(*std::max_element(a.smoothed.begin(), a.smoothed.end()) < raw_max);
    }
  }
}

TEST_CASE("smoothing argument checks") {
  CHECK_THROWS_AS(smooth_weights({{"de", 1}}, 0.0), UsageError);
  CHECK_THROWS_AS(smooth_weights({{"de", 1}}, 1.5), UsageError);
  CHECK_THROWS_AS(smooth_weights({{"de", 0}}, 0.3), DataError);
}

TEST_CASE("largest remainder allocation sums to the budget and breaks ties by index") {
  CHECK(allocate_largest_remainder(std::vector<double>{0.5, 0.25, 0.25}, 3) == std::vector<uint64_t>{1, 1, 1});
  CHECK(allocate_largest_remainder(std::vector<double>{0.25, 0.25, 0.5}, 2) == std::vector<uint64_t>{1, 0, 1});
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = smooth_weights(random_counts(rng), 0.3);
    const uint64_t budget = 1 + rng.uniform_index(100000);
    const auto a = allocate_targets(w, budget);
    uint64_t total = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      total += a[i];
      CHECK(std::abs(static_cast<double>(a[i]) - budget * w.smoothed[i]) < 1.0);
    }
    CHECK(total == budget);
  }
}

TEST_CASE("compose is deterministic and its hash depends only on spec and content") {
  const auto pools = fixture_pools();
  CompositionSpec spec{Strategy::kMdMwiki, 500, 0.3, 9};
  const auto a = manifest_to_json(compose(spec, pools)).dump();
  const auto b = manifest_to_json(compose(spec, pools)).dump();
  CHECK(a == b);

  auto shuffled = pools;
  Rng rng(4);
  rng.shuffle(shuffled.general_multilingual.begin(), shuffled.general_multilingual.end());
  rng.shuffle(shuffled.domain_multilingual.begin(), shuffled.domain_multilingual.end());
  CHECK(compose(spec, shuffled).content_hash == compose(spec, pools).content_hash);

  spec.seed = 10;
  CHECK(compose(spec, pools).content_hash != nlohmann::json::parse(a).at("content_hash"));
}

TEST_CASE("compose never repeats a sentence and fills the budget when pools suffice") {
  const auto pools = fixture_pools();
  for (auto s : {Strategy::kEd, Strategy::kMdEd, Strategy::kMdMwiki}) {
    CAPTURE(strategy_name(s));
    const auto m = compose({s, 400, 0.3, 1}, pools);
    std::set<std::tuple<std::string, std::string, uint64_t>> seen;
    for (const auto& r : m.references) {
      CHECK(seen.insert({r.source, r.doc_id, r.sent_id}).second);
    }
    CHECK(m.references.size() == 400);
    CHECK_FALSE(m.shortfall);
  }
}

TEST_CASE("md-mwiki gives no general data to a language whose domain pool exceeds its target") {
  const auto m = compose({Strategy::kMdMwiki, 500, 0.3, 1}, fixture_pools());
  const auto& de = m.per_language.at("de");
  CHECK(de.domain == 300);
  CHECK(de.target < 300);
  CHECK(de.topup == 0);
  CHECK(m.per_language.at("fr").topup > 0);
  CHECK(m.references.size() == 500);
  for (const auto& r : m.references) {
    if (r.lang != "en" && r.origin != PoolKind::kDomainMultilingual) {
      CHECK(r.origin == PoolKind::kGeneralMultilingual);
    }
  }
}

TEST_CASE("strategy contents") {
  const auto pools = fixture_pools();
  const auto ed = compose({Strategy::kEd, 100, 0.3, 1}, pools);
  for (const auto& r : ed.references) CHECK(r.origin == PoolKind::kDomainEnglish);
  const auto mded = compose({Strategy::kMdEd, 400, 0.3, 1}, pools);
  size_t md = 0;
  for (const auto& r : mded.references) md += r.origin == PoolKind::kDomainMultilingual;
  CHECK(md == 360);
}

TEST_CASE("small pools give a reported shortfall, not an error") {
  const auto m = compose({Strategy::kEd, 10'000, 0.3, 1}, fixture_pools());
  CHECK(m.shortfall);
  CHECK(m.missing == 10'000 - 500);
}

TEST_CASE("compose argument errors") {
  CHECK_THROWS_AS(compose({Strategy::kEd, 0, 0.3, 1}, fixture_pools()), UsageError);
  Pools no_md = fixture_pools();
  no_md.domain_multilingual.clear();
  CHECK_THROWS_AS(compose({Strategy::kMdMwiki, 10, 0.3, 1}, no_md), UsageError);
  CHECK_FALSE(parse_strategy("bogus").has_value());
  CHECK(parse_strategy("md-ed") == Strategy::kMdEd);
}

TEST_CASE("manifest json round trip and resolution") {
  const auto pools = fixture_pools();
  const auto m = compose({Strategy::kMdMwiki, 300, 0.3, 5}, pools);
  const auto back = manifest_from_json(manifest_to_json(m));
  CHECK(back.references == m.references);
  CHECK(back.content_hash == m.content_hash);
  CHECK(back.per_language == m.per_language);
  const auto records = resolve_manifest(back, pools);
  CHECK(records.size() == 300);
  Pools empty;
  CHECK_THROWS_AS(resolve_manifest(back, empty), DataError);
}

TEST_CASE("manifest report has a header and a total row") {
  const auto report = manifest_report(compose({Strategy::kMdEd, 400, 0.3, 1}, fixture_pools()));
  CHECK(report.rfind("lang", 0) == 0);
  CHECK(report.find("total") != std::string::npos);
  CHECK(manifest_report(CorpusManifest{}).find('\n') == report.find('\n'));
}
