// One line per acceptance criterion: PASS/FAIL, the measured values, and the
// wall-clock time against its budget. Exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "mdapt/cli/fixtures.h"
#include "mdapt/cli/pipeline.h"
#include "mdapt/cli/profile.h"
#include "mdapt/common/rng.h"
#include "mdapt/composer/composer.h"
#include "mdapt/composer/weights.h"
#include "mdapt/encoder/encoder.h"
#include "mdapt/encoder/masking.h"
#include "mdapt/encoder/optimizer.h"
#include "mdapt/evaluation/metrics.h"
#include "mdapt/evaluation/retrieval.h"
#include "mdapt/tokenizer/continued_words.h"
#include "mdapt/training/ner.h"
#include "mdapt/training/pretrain.h"
#include "oracles.h"
#include "temp_dir.h"
#include "tiny_model.h"

using namespace mdapt;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kSmoothingTol = 1e-9;
constexpr double kMaskBucketTol = 0.02;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradEps = 1e-4;
constexpr double kGradFloor = 1e-6;
constexpr float kAdapterOutputTol = 1e-6f;
constexpr double kLossReduction = 0.20;
constexpr double kAccumRelTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1
Outcome smoothing() {
  Rng rng(2024);
  double worst = 0.0;
  bool alpha_one_exact = true, flattens = true;
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, uint64_t> counts;
    const auto n = 2 + rng.uniform_index(19);
    for (uint64_t i = 0; i < n; ++i) counts["l" + std::to_string(10 + i)] = 1 + rng.uniform_index(5'000'000);
    const auto w = composer::smooth_weights(counts, 0.3);
    const auto expect = oracle::smoothed_weights(counts, 0.3);
    for (size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::abs(w.smoothed[i] - expect[i]));
    const auto raw = composer::smooth_weights(counts, 1.0);
    alpha_one_exact &= raw.smoothed == raw.raw;
    const double raw_max = *std::max_element(w.raw.begin(), w.raw.end());
    const double raw_min = *std::min_element(w.raw.begin(), w.raw.end());
    if (raw_max > raw_min) flattens &= *std::max_element(w.smoothed.begin(), w.smoothed.end()) < raw_max;
  }
  return {worst <= kSmoothingTol && alpha_one_exact && flattens,
          "max|diff|=" + fmt(worst, 3) + " alpha1_exact=" + std::to_string(alpha_one_exact) +
              " flattens=" + std::to_string(flattens)};
}

// ---------------------------------------------------------------- 2
std::vector<ingest::SentenceRecord> make_pool(const std::string& source,
                                              const std::map<std::string, int>& sizes) {
  std::vector<ingest::SentenceRecord> out;
  for (const auto& [lang, n] : sizes) {
    for (int i = 0; i < n; ++i) {
      out.push_back({source + " " + lang + " " + std::to_string(i), lang, source,
                     lang + std::to_string(i / 4), static_cast<uint64_t>(i % 4)});
    }
  }
  return out;
}

Outcome composition() {
  testing::TempDir dir("acc2");
  cli::SyntheticSpec spec;
  const auto fx = cli::generate_fixtures(spec, dir.path());
  const auto pools = cli::fixture_pools(fx, cli::kTargetDomain);
  composer::CompositionSpec cs{composer::Strategy::kMdMwiki, 2000, 0.3, 7};
  const auto a = composer::manifest_to_json(composer::compose(cs, pools)).dump();
  const auto b = composer::manifest_to_json(composer::compose(cs, pools)).dump();
  const bool identical = a == b;

  // "de" holds far more domain data than its smoothed share of the budget.
  const composer::Pools skewed{make_pool("md", {{"de", 900}, {"fr", 60}, {"es", 30}}),
                               make_pool("ed", {{"en", 1200}}),
                               make_pool("wiki", {{"de", 500}, {"fr", 500}, {"es", 500}, {"en", 500}})};
  const auto m = composer::compose({composer::Strategy::kMdMwiki, 1000, 0.3, 1}, skewed);
  const auto& de = m.per_language.at("de");
  const bool de_zero = de.domain > de.target && de.topup == 0;
  bool totals = m.references.size() == 1000 && !m.shortfall;
  for (auto s : {composer::Strategy::kEd, composer::Strategy::kMdEd}) {
    const auto x = composer::compose({s, 1000, 0.3, 1}, skewed);
    totals &= x.references.size() == 1000 && !x.shortfall;
  }
  return {identical && de_zero && totals,
          "identical=" + std::to_string(identical) + " de(domain=" + std::to_string(de.domain) +
              ",target=" + std::to_string(de.target) + ",general=" + std::to_string(de.topup) +
              ") totals_equal_budget=" + std::to_string(totals)};
}

// ---------------------------------------------------------------- 3
Outcome masking() {
  // Same golden fixture as the masking unit test.
  std::vector<tokenizer::TokenId> ids{tokenizer::kClsId};
  for (int i = 0; i < 10'000; ++i) ids.push_back(static_cast<tokenizer::TokenId>(5 + i % 50));
  ids.push_back(tokenizer::kSepId);
  Rng rng(7);
  const auto m = encoder::make_masking_plan(ids, 60, {}, rng);
  const size_t expect = static_cast<size_t>(std::ceil(0.15 * 10'000));
  std::map<encoder::MaskAction, double> hist;
  for (auto a : m.plan.actions) hist[a] += 1.0 / static_cast<double>(m.plan.actions.size());
  const double pm = hist[encoder::MaskAction::kMask], pr = hist[encoder::MaskAction::kRandom],
               pk = hist[encoder::MaskAction::kKeep];
  const bool ok = m.plan.positions.size() == expect && std::abs(pm - 0.8) <= kMaskBucketTol &&
                  std::abs(pr - 0.1) <= kMaskBucketTol && std::abs(pk - 0.1) <= kMaskBucketTol;
  return {ok, "selected=" + std::to_string(m.plan.positions.size()) + "/" + std::to_string(expect) +
                  " mask=" + fmt(pm) + " random=" + fmt(pr) + " keep=" + fmt(pk)};
}

// ---------------------------------------------------------------- 4
Outcome gradients() {
  testing::TinyModel full, adapters;
  const auto a = full.check(encoder::TrainableSet::kAll, kGradEps, kGradFloor);
  const auto b = adapters.check(encoder::TrainableSet::kAdaptersAndHeads, kGradEps, kGradFloor);
  return {a.worst < kGradRelTol && b.worst < kGradRelTol,
          "full: worst_rel=" + fmt(a.worst, 3) + " over " + std::to_string(a.coordinates) +
              " coords; adapter: worst_rel=" + fmt(b.worst, 3) + " over " +
              std::to_string(b.coordinates) + " coords"};
}

// ---------------------------------------------------------------- 5
Outcome adapters() {
  const encoder::EncoderConfig cfg{2, 32, 4, 64, 32, 200, std::nullopt, 0.0};
  encoder::Encoder<float> model(cfg, 11);
  Rng rng(12);
  std::vector<training::Sequence> inputs;
  for (int i = 0; i < 100; ++i) {
    training::Sequence s{tokenizer::kClsId};
    const auto len = 1 + rng.uniform_index(29);
    for (uint64_t j = 0; j < len; ++j) s.push_back(static_cast<tokenizer::TokenId>(5 + rng.uniform_index(195)));
    s.push_back(tokenizer::kSepId);
    inputs.push_back(s);
  }
  std::vector<autograd::Matrix<float>> before;
  for (const auto& s : inputs) before.push_back(model.forward(s, encoder::Mode::kEval).final().value());
  model.add_adapters(16, 13);
  float worst = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const auto after = model.forward(inputs[i], encoder::Mode::kEval).final().value();
    worst = std::max(worst, (after - before[i]).cwiseAbs().maxCoeff());
  }
  const auto base_before = model.params().fingerprint(encoder::ParamGroup::kBase);
  const auto adapter_before = model.params().fingerprint(encoder::ParamGroup::kAdapter);
  training::TrainConfig tc;
  tc.mode = training::TrainMode::kAdapter;
  tc.learning_rate = 1e-3;
  tc.effective_batch = 8;
  tc.micro_batch = 8;
  tc.max_steps = 100;
  tc.seed = 14;
  training::pretrain_mlm(model, inputs, tc);
  const bool base_same = model.params().fingerprint(encoder::ParamGroup::kBase) == base_before;
  const bool adapters_moved = model.params().fingerprint(encoder::ParamGroup::kAdapter) != adapter_before;
  return {worst < kAdapterOutputTol && base_same && adapters_moved,
          "max|delta output|=" + fmt(worst, 3) + " base_bytes_identical=" + std::to_string(base_same) +
              " adapters_trained=" + std::to_string(adapters_moved)};
}

// ---------------------------------------------------------------- 6 and 9
struct DeskExperiment {
  double setup_seconds = 0;  // fixtures, vocabulary, base pretraining
  double loss_base = 0, loss_in = 0, loss_other = 0;
  double f1_in = 0, f1_other = 0, f1_base = 0;
  double p1_random = 0, p1_base = 0, p1_in = 0;
  double dapt_seconds = 0;
  double retrieval_seconds = 0;
};

DeskExperiment run_desk_experiment() {
  DeskExperiment e;
  const auto t0 = std::chrono::steady_clock::now();
  testing::TempDir dir("acc6");
  const cli::RunProfile p = cli::with_seed(cli::desk_profile(), 0);
  const auto fx = cli::generate_fixtures(p.fixtures, dir.path());
  const auto target = cli::fixture_pools(fx, cli::kTargetDomain);
  const auto other = cli::fixture_pools(fx, cli::kOtherDomain);
  std::vector<fs::path> vocab_sources{fx.general_pool()};
  for (const auto* d : {cli::kTargetDomain, cli::kOtherDomain}) {
    vocab_sources.push_back(fx.pool(d, "domain-multilingual"));
    vocab_sources.push_back(fx.pool(d, "domain-english"));
  }
  const auto vocab =
      tokenizer::build_vocab(cli::texts_of(cli::read_corpus_paths(vocab_sources)), p.vocab_size);
  const auto cfg = cli::model_config(p, vocab);
  const auto max_len = static_cast<size_t>(cfg.max_seq_len);
  const encoder::Encoder<float> random_model(cfg, p.base_pretrain.seed);
  encoder::Encoder<float> base = random_model;
  training::pretrain_mlm(base, training::encode_texts(cli::texts_of(target.general_multilingual), vocab, max_len),
                         p.base_pretrain);
  e.setup_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  e.p1_random = cli::fixture_retrieval_p1(random_model, vocab, fx);
  e.p1_base = cli::fixture_retrieval_p1(base, vocab, fx);
  e.retrieval_seconds = seconds_since(t1);

  const auto t2 = std::chrono::steady_clock::now();
  const auto adapt = [&](const composer::Pools& pools) {
    return cli::domain_adapt(base, vocab, composer::compose(p.composition, pools), pools, p.dapt);
  };
  const auto in_domain = adapt(target);
  const auto other_domain = adapt(other);
  const auto held = training::encode_texts(
      cli::texts_of(ingest::read_corpus(fx.heldout(cli::kTargetDomain), "", "").records), vocab, max_len);
  e.loss_base = training::evaluate_mlm_loss(base, held, p.dapt.masking, 7);
  e.loss_in = training::evaluate_mlm_loss(in_domain, held, p.dapt.masking, 7);
  e.loss_other = training::evaluate_mlm_loss(other_domain, held, p.dapt.masking, 7);
  const training::NerDataset ner{training::read_conll(fx.ner("train")), training::read_conll(fx.ner("dev")),
                                 training::read_conll(fx.ner("test"))};
  auto f1 = [&](const encoder::Encoder<float>& start) {
    auto m = start;
    return training::finetune_ner(m, vocab, ner, p.ner).test.f1;
  };
  e.f1_in = f1(in_domain);
  e.f1_other = f1(other_domain);
  e.f1_base = f1(base);
  e.p1_in = cli::fixture_retrieval_p1(in_domain, vocab, fx);
  e.dapt_seconds = seconds_since(t2);
  return e;
}

DeskExperiment& desk() {
  static std::optional<DeskExperiment> e;
  if (!e) e = run_desk_experiment();
  return *e;
}

Outcome dapt_effect() {
  const auto& e = desk();
  const double reduction = 1.0 - e.loss_in / e.loss_base;
  return {reduction >= kLossReduction && e.f1_in > e.f1_other,
          "heldout MLM loss base=" + fmt(e.loss_base) + " in-domain=" + fmt(e.loss_in) +
              " other-domain=" + fmt(e.loss_other) + " (reduction " + fmt(100 * reduction, 3) +
              "%); NER F1 in-domain=" + fmt(e.f1_in) + " other-domain=" + fmt(e.f1_other) +
              " base=" + fmt(e.f1_base)};
}

Outcome retrieval() {
  const auto& e = desk();
  return {e.p1_base > e.p1_random,
          "P@1 random-init=" + fmt(e.p1_random) + " pretrained=" + fmt(e.p1_base) +
              " (in-domain DAPT=" + fmt(e.p1_in) + ")"};
}

// ---------------------------------------------------------------- 7
std::vector<evaluation::SpanMention> random_spans(Rng& rng) {
  std::vector<evaluation::SpanMention> out;
  const char* labels[] = {"A", "B", "C"};
  for (size_t s = 0; s < 3; ++s) {
    size_t pos = rng.uniform_index(3);
    while (pos < 8) {
      const size_t len = 1 + rng.uniform_index(std::min<size_t>(2, 8 - pos));
      out.push_back({s, pos, pos + len, labels[rng.uniform_index(3)]});
      pos += len + rng.uniform_index(3);
    }
  }
  return out;
}

Outcome metrics() {
  Rng rng(77);
  size_t span_mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    const auto gold = random_spans(rng);
    auto pred = random_spans(rng);
    if (t % 2 == 0) pred.insert(pred.end(), gold.begin(), gold.begin() + gold.size() / 2);
    std::sort(pred.begin(), pred.end());
    pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
    const auto got = evaluation::span_micro_f1(gold, pred);
    const auto want = oracle::count_spans(gold, pred);
    span_mismatch += got.true_positives != want.tp || got.false_positives != want.fp ||
                     got.false_negatives != want.fn;
  }
  size_t acc_mismatch = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> g, p;
    size_t same = 0;
    const auto n = 1 + rng.uniform_index(50);
    for (size_t i = 0; i < n; ++i) {
      g.push_back(std::to_string(rng.uniform_index(5)));
      p.push_back(std::to_string(rng.uniform_index(5)));
      same += g.back() == p.back();
    }
    acc_mismatch += std::abs(evaluation::sentence_micro_f1(g, p) - static_cast<double>(same) / n) > 1e-12;
  }
  size_t pk_mismatch = 0, non_monotone = 0;
  for (int t = 0; t < 100; ++t) {
    const size_t n = 3 + rng.uniform_index(10);
    std::vector<evaluation::SentenceVector> src, tgt;
    std::vector<evaluation::RetrievalPair> gold;
    for (size_t i = 0; i < n; ++i) {
      Eigen::VectorXd a(4), b(4);
      for (int d = 0; d < 4; ++d) {
        a[d] = static_cast<double>(rng.uniform_index(5)) - 2.0;
        b[d] = static_cast<double>(rng.uniform_index(5)) - 2.0;
      }
      if (a.norm() == 0) a[0] = 1;
      if (b.norm() == 0) b[1] = 1;
      src.push_back({"s" + std::to_string(i), a});
      tgt.push_back({"t" + std::to_string(i), b});
      gold.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
    }
    double prev = 0.0;
    for (size_t k = 1; k <= n; ++k) {
      const double got = evaluation::retrieve_precision_at_k(src, tgt, gold, k);
      pk_mismatch += std::abs(got - oracle::precision_at_k(src, tgt, gold, k)) > 1e-12;
      non_monotone += got < prev;
      prev = got;
    }
  }
  return {span_mismatch == 0 && acc_mismatch == 0 && pk_mismatch == 0 && non_monotone == 0,
          "span mismatches=" + std::to_string(span_mismatch) + "/200 accuracy mismatches=" +
              std::to_string(acc_mismatch) + "/50 P@k mismatches=" + std::to_string(pk_mismatch) +
              " monotonicity violations=" + std::to_string(non_monotone)};
}

// ---------------------------------------------------------------- 8
tokenizer::Vocabulary vocab_of(std::vector<std::string> extra) {
  std::vector<std::string> t(tokenizer::kSpecialTokens.begin(), tokenizer::kSpecialTokens.end());
  t.insert(t.end(), extra.begin(), extra.end());
  return tokenizer::Vocabulary(t);
}

Outcome continued_words() {
  const auto v = vocab_of({"alpha", "beta", "gam", "##ma", "del", "##ta", "eps"});
  const double zero = tokenizer::continued_word_fraction({"alpha beta", "eps"}, v);
  const double one = tokenizer::continued_word_fraction({"gamma delta"}, v);
  const double forty = tokenizer::continued_word_fraction({"alpha gamma beta", "delta eps"}, v);
  const bool exact = zero == 0.0 && one == 1.0 && std::abs(forty - 0.4) < 1e-15;

  // A knows the general words and the domain terms whole; B (shared across
  // many languages) knows the general words whole except one, and has to
  // spell the domain terms from pieces.
  const std::vector<std::string> general{"the patient was seen today", "the results were good"};
  const std::vector<std::string> specific{"the cardiomyopathy was idiopathic",
                                          "the patient had tachycardia"};
  const auto a = vocab_of({"the", "patient", "was", "seen", "today", "results", "were", "good",
                           "cardiomyopathy", "idiopathic", "had", "tachycardia"});
  const auto b = vocab_of({"the", "patient", "was", "seen", "to", "##day", "results", "were",
                           "good", "had", "cardio", "##myo", "##pathy", "idio", "##pathic",
                           "tachy", "##cardia"});
  const auto gap = tokenizer::tokenizer_gap_report(a, b, general, specific);
  return {exact && gap.delta_specific > gap.delta_general,
          "fractions=" + fmt(zero) + "/" + fmt(one) + "/" + fmt(forty) +
              " delta_general=" + fmt(gap.delta_general) + " delta_specific=" + fmt(gap.delta_specific)};
}

// ---------------------------------------------------------------- 10
Outcome accumulation() {
  const encoder::EncoderConfig cfg{2, 16, 2, 32, 24, 60, std::nullopt, 0.0};
  Rng rng(99);
  std::vector<training::Sequence> data;
  for (int i = 0; i < 64; ++i) {
    training::Sequence s{tokenizer::kClsId};
    const auto len = 4 + rng.uniform_index(16);
    for (uint64_t j = 0; j < len; ++j) s.push_back(static_cast<tokenizer::TokenId>(5 + rng.uniform_index(55)));
    s.push_back(tokenizer::kSepId);
    data.push_back(s);
  }
  const encoder::Encoder<double> origin(cfg, 5);
  encoder::Encoder<double> single = origin, accumulated = origin;
  const encoder::AdamWOptions opt{1e-3, 0.9, 0.999, 1e-8, 0.01};
  encoder::AdamW<double> opt_a(opt), opt_b(opt);
  const size_t batch = 16, micro = 4;
  for (int step = 0; step < 4; ++step) {
    const auto examples = std::span<const training::Sequence>(data).subspan(step * batch, batch);
    std::vector<uint64_t> seeds;
    for (size_t j = 0; j < batch; ++j) seeds.push_back(Rng::derive_seed(uint64_t{1000}, step * batch + j));
    single.params().zero_grad();
    training::accumulate_mlm_gradients<double>(single, examples, seeds, 1.0 / batch, {});
    opt_a.step(single.params());
    accumulated.params().zero_grad();
    for (size_t s = 0; s < batch; s += micro) {
      training::accumulate_mlm_gradients<double>(accumulated, examples.subspan(s, micro),
                                                 std::span<const uint64_t>(seeds).subspan(s, micro),
                                                 1.0 / batch, {});
    }
    opt_b.step(accumulated.params());
  }
  double diff = 0, norm = 0;
  for (size_t i = 0; i < origin.params().all().size(); ++i) {
    const auto& o = origin.params().all()[i].var.value();
    const auto da = single.params().all()[i].var.value() - o;
    const auto db = accumulated.params().all()[i].var.value() - o;
    diff += (da - db).squaredNorm();
    norm += da.squaredNorm();
  }
  const double rel = std::sqrt(diff / norm);
  return {rel < kAccumRelTol, "relative update difference=" + fmt(rel, 3) +
                                  " (4 steps, batch 16 vs 4x4 micro-batches)"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
  // Seconds of shared work charged to this criterion besides its own call.
  std::function<double()> shared_seconds = [] { return 0.0; };
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "smoothing oracle", 1, smoothing},
      {2, "composition determinism and shape", 5, composition},
      {3, "masking statistics", 5, masking},
      {4, "gradient correctness", 60, gradients},
      {5, "adapter insertion and freezing", 60, adapters},
      {6, "desk-scale DAPT effect", 600, dapt_effect,
       [] { return desk().setup_seconds + desk().dapt_seconds; }},
      {7, "metric oracles", 10, metrics},
      {8, "continued-words metric", 5, continued_words},
      {9, "retrieval direction", 600, retrieval,
       [] { return desk().setup_seconds + desk().retrieval_seconds; }},
      {10, "gradient-accumulation equivalence", 30, accumulation},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    double elapsed = 0;
    try {
      o = c.run();
      elapsed = c.shared_seconds() > 0 ? c.shared_seconds() : seconds_since(t0);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
      elapsed = seconds_since(t0);
    }
    const bool in_time = elapsed <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %2d: %s  %s: %s  [%.2fs / %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), elapsed, c.budget_seconds, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
