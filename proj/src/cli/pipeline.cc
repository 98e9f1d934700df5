#include "mdapt/cli/pipeline.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"
#include "mdapt/encoder/checkpoint.h"
#include "mdapt/training/classify.h"
#include "mdapt/training/ner.h"
#include "mdapt/tokenizer/wordpiece.h"
#include "mdapt/training/pretrain.h"

namespace mdapt::cli {
namespace fs = std::filesystem;

namespace {

const char* column_name(std::optional<composer::Strategy> s) {
  if (!s) return "base";
  switch (*s) {
    case composer::Strategy::kEd: return "+E_D";
    case composer::Strategy::kMdEd: return "+M_D+E_D";
    case composer::Strategy::kMdMwiki: return "+M_D+M_WIKI";
  }
  return "?";
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

struct TaskScores {
  double ner = 0.0;
  double clf = 0.0;
  nlohmann::json detail;
};

TaskScores finetune_tasks(const encoder::Encoder<float>& pretrained,
                          const tokenizer::Vocabulary& vocab, const RunProfile& profile,
                          const FixtureLayout& fx, const fs::path& ckpt_dir,
                          const std::string& tag) {
  TaskScores scores;
  run_stage("finetune-ner:" + tag, [&] {
    training::NerDataset data{training::read_conll(fx.ner("train")),
                              training::read_conll(fx.ner("dev")),
                              training::read_conll(fx.ner("test"))};
    auto model = pretrained;
    const auto& cfg = model.has_adapters() ? profile.ner_adapter : profile.ner;
    const auto r = training::finetune_ner(model, vocab, data, cfg);
    encoder::save_checkpoint(model, ckpt_dir / ("ner-" + tag + ".ckpt"),
                             {encoder::ParamGroup::kBase, encoder::ParamGroup::kAdapter,
                              encoder::ParamGroup::kHead},
                             {{"task", "ner"}, {"labels", r.labels}});
    scores.ner = r.test.f1;
    scores.detail["ner"] = {{"test_f1", r.test.f1},
                            {"test_precision", r.test.precision},
                            {"test_recall", r.test.recall},
                            {"best_dev_f1", r.best_dev_metric},
                            {"epochs_run", r.epochs_run},
                            {"best_epoch", r.best_epoch},
                            {"loss_trace", r.record.loss_trace}};
  });
  run_stage("finetune-clf:" + tag, [&] {
    const auto data = training::read_labeled_jsonl(fx.classification());
    const auto splits = training::make_classification_splits(data, profile.classify.seed);
    auto model = pretrained;
    const auto r = training::finetune_classify(model, vocab, splits, profile.classify, profile.grid);
    encoder::save_checkpoint(model, ckpt_dir / ("clf-" + tag + ".ckpt"),
                             {encoder::ParamGroup::kBase, encoder::ParamGroup::kAdapter,
                              encoder::ParamGroup::kHead},
                             {{"task", "clf"}, {"labels", r.labels}});
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& g : r.grid) {
      grid.push_back({{"batch_size", g.cell.batch_size},
                      {"epochs", g.cell.epochs},
                      {"dev_micro_f1", g.dev_metric}});
    }
    scores.clf = r.test_metric;
    scores.detail["clf"] = {{"test_micro_f1", r.test_metric},
                            {"selected", r.selected},
                            {"grid", grid}};
  });
  return scores;
}

}  // namespace

std::vector<ingest::SentenceRecord> read_corpus_paths(const std::vector<fs::path>& paths) {
  std::vector<ingest::SentenceRecord> out;
  for (const auto& p : paths) {
    std::vector<ingest::SentenceRecord> part;
    if (fs::is_directory(p)) {
      bool has_files = false;
      std::vector<fs::path> subdirs;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_directory()) subdirs.push_back(e.path());
        if (e.is_regular_file() && e.path().extension() == ".jsonl") has_files = true;
      }
      if (has_files) part = read_pool_dir(p);
      std::sort(subdirs.begin(), subdirs.end());
      auto nested = read_corpus_paths(subdirs);
      part.insert(part.end(), nested.begin(), nested.end());
    } else {
      auto r = ingest::read_corpus(p, "", "");
      if (!r.errors.empty()) {
        throw DataError(p.string() + ":" + std::to_string(r.errors.front().line) + ": " +
                        r.errors.front().message);
      }
      part = std::move(r.records);
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<std::string> texts_of(const std::vector<ingest::SentenceRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.text);
  return out;
}

composer::Pools fixture_pools(const FixtureLayout& layout, const std::string& domain) {
  return {read_pool_dir(layout.pool(domain, "domain-multilingual")),
          read_pool_dir(layout.pool(domain, "domain-english")),
          read_pool_dir(layout.general_pool())};
}

encoder::EncoderConfig model_config(const RunProfile& profile,
                                    const tokenizer::Vocabulary& vocab) {
  auto cfg = profile.encoder;
  cfg.vocab_size = static_cast<int>(vocab.size());
  return cfg;
}

std::vector<evaluation::SentenceVector> sentence_vectors(
    const encoder::Encoder<float>& model, const tokenizer::Vocabulary& vocab,
    const std::vector<RetrievalSentence>& sentences) {
  std::vector<evaluation::SentenceVector> out;
  out.reserve(sentences.size());
  const auto max_len = static_cast<size_t>(model.config().max_seq_len);
  for (const auto& s : sentences) {
    const auto enc = tokenizer::encode(s.text, vocab, max_len);
    const auto o = model.forward(enc.subtoken_ids, encoder::Mode::kEval);
    const Eigen::MatrixXd h = o.final().value().cast<double>();
    out.push_back({s.id, evaluation::mean_pool(h, enc.subtoken_ids)});
  }
  return out;
}

std::vector<evaluation::SentenceVector> read_vectors(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<evaluation::SentenceVector> out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto v = j.at("vector").get<std::vector<double>>();
      out.push_back({j.at("id").get<std::string>(),
                     Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_vectors(const fs::path& path, const std::vector<evaluation::SentenceVector>& vectors) {
  std::ofstream out(path);
  for (const auto& v : vectors) {
    out << nlohmann::json{{"id", v.id},
                          {"vector", std::vector<double>(v.vector.begin(), v.vector.end())}}
               .dump()
        << '\n';
  }
  if (!out) throw DataError("cannot write " + path.string());
}

double fixture_retrieval_p1(const encoder::Encoder<float>& model,
                            const tokenizer::Vocabulary& vocab, const FixtureLayout& layout) {
  return evaluation::retrieve_precision_at_k(
      sentence_vectors(model, vocab, read_retrieval_sentences(layout.retrieval_sources())),
      sentence_vectors(model, vocab, read_retrieval_sentences(layout.retrieval_targets())),
      evaluation::read_alignment(layout.alignment()), 1);
}

encoder::Encoder<float> domain_adapt(const encoder::Encoder<float>& base,
                                     const tokenizer::Vocabulary& vocab,
                                     const composer::CorpusManifest& manifest,
                                     const composer::Pools& pools,
                                     const training::TrainConfig& cfg,
                                     const training::PretrainOptions& options) {
  encoder::Encoder<float> model = base;
  if (cfg.mode == training::TrainMode::kAdapter && !model.has_adapters()) {
    model.add_adapters(cfg.adapter_dim, Rng::derive_seed(cfg.seed, "adapter"));
  }
  const auto records = composer::resolve_manifest(manifest, pools);
  const auto seqs = training::encode_texts(texts_of(records), vocab,
                                           static_cast<size_t>(model.config().max_seq_len));
  training::pretrain_mlm(model, seqs, cfg, options);
  return model;
}

void run_stage(const std::string& stage, const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ExitCode::kDataError, "stage " + stage + ": " + e.what());
  }
}

PipelineResult run_pipeline(const PipelineOptions& options) {
  const RunProfile& profile = options.profile;
  auto log = [&](const std::string& m) {
    if (options.log) options.log(m);
  };
  std::vector<composer::Strategy> strategies = options.strategies;
  if (strategies.empty()) {
    strategies = {composer::Strategy::kEd, composer::Strategy::kMdEd,
                  composer::Strategy::kMdMwiki};
  }
  const fs::path ckpt_dir = options.out / "checkpoints";
  fs::create_directories(ckpt_dir);
  nlohmann::json timings = nlohmann::json::object();
  auto timed = [&](const std::string& stage, const std::function<void()>& body) {
    log("stage " + stage);
    const auto t0 = std::chrono::steady_clock::now();
    run_stage(stage, body);
    timings[stage] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  FixtureLayout fx{options.fixtures.value_or(options.out / "fixtures")};
  if (!options.fixtures) {
    timed("fixtures", [&] { fx = generate_fixtures(profile.fixtures, fx.root); });
  }
  composer::Pools pools;
  timed("read-pools", [&] { pools = fixture_pools(fx, kTargetDomain); });

  std::optional<tokenizer::Vocabulary> vocab_holder;
  timed("vocab", [&] {
    if (options.vocab) {
      vocab_holder = tokenizer::Vocabulary::load(*options.vocab);
    } else {
      std::vector<fs::path> dirs = {fx.general_pool()};
      for (const auto* d : {kTargetDomain, kOtherDomain}) {
        dirs.push_back(fx.pool(d, "domain-multilingual"));
        dirs.push_back(fx.pool(d, "domain-english"));
      }
      vocab_holder = tokenizer::build_vocab(texts_of(read_corpus_paths(dirs)),
                                            profile.vocab_size);
    }
    vocab_holder->save(options.out / "vocab.txt");
  });
  const tokenizer::Vocabulary& vocab = *vocab_holder;

  std::optional<encoder::Encoder<float>> base;
  timed("pretrain-base", [&] {
    if (options.base_checkpoint) {
      base = encoder::load_model(*options.base_checkpoint);
      if (base->config().vocab_size != static_cast<int>(vocab.size())) {
        throw DataError("base checkpoint vocabulary size does not match the vocabulary");
      }
      return;
    }
    base.emplace(model_config(profile, vocab), profile.base_pretrain.seed);
    const auto seqs = training::encode_texts(texts_of(pools.general_multilingual), vocab,
                                             static_cast<size_t>(base->config().max_seq_len));
    training::PretrainOptions po;
    po.checkpoint_path = ckpt_dir / "base.ckpt";
    po.meta = {{"stage", "base"}};
    training::pretrain_mlm(*base, seqs, profile.base_pretrain, po);
  });

  nlohmann::json metrics = {{"format_version", 1},
                            {"profile", profile.name},
                            {"columns", nlohmann::json::object()}};
  auto record = [&](const std::string& column, const TaskScores& s, nlohmann::json extra) {
    extra["ner_test_f1"] = s.ner;
    extra["clf_test_micro_f1"] = s.clf;
    extra["detail"] = s.detail;
    metrics["columns"][column] = extra;
  };
  {
    TaskScores s;
    double p1 = 0.0;
    timed("retrieve:base", [&] { p1 = fixture_retrieval_p1(*base, vocab, fx); });
    timed("finetune:base", [&] {
      s = finetune_tasks(*base, vocab, profile, fx, ckpt_dir, "base");
    });
    record("base", s, {{"retrieval_p_at_1", p1}});
  }
  for (const auto strategy : strategies) {
    const std::string name(composer::strategy_name(strategy));
    composer::CorpusManifest manifest;
    timed("compose:" + name, [&] {
      auto spec = profile.composition;
      spec.strategy = strategy;
      manifest = composer::compose(spec, pools);
      manifest.pool_files = {
          {"domain-multilingual", {fx.pool(kTargetDomain, "domain-multilingual").string()}},
          {"domain-english", {fx.pool(kTargetDomain, "domain-english").string()}},
          {"general-multilingual", {fx.general_pool().string()}}};
      write_json(options.out / ("manifest-" + name + ".json"),
                 composer::manifest_to_json(manifest));
    });
    std::optional<encoder::Encoder<float>> adapted;
    nlohmann::json extra;
    timed("pretrain:" + name, [&] {
      training::PretrainOptions po;
      po.checkpoint_path = ckpt_dir / ("dapt-" + name + ".ckpt");
      po.meta = {{"stage", "dapt"}, {"strategy", name}, {"manifest", manifest.content_hash}};
      training::RunRecord r;
      po.on_step = [&](int, double loss) { r.loss_trace.push_back(loss); };
      adapted = domain_adapt(*base, vocab, manifest, pools,
                             options.adapters ? profile.dapt_adapter : profile.dapt, po);
      const auto held = training::encode_texts(
          texts_of(ingest::read_corpus(fx.heldout(kTargetDomain), "", "").records), vocab,
          static_cast<size_t>(adapted->config().max_seq_len));
      extra = {{"manifest_hash", manifest.content_hash},
               {"pretrain_sentences", manifest.references.size()},
               {"final_train_loss", r.loss_trace.empty() ? 0.0 : r.loss_trace.back()},
               {"heldout_mlm_loss",
                training::evaluate_mlm_loss(*adapted, held, profile.dapt.masking, 0)}};
    });
    TaskScores s;
    timed("finetune:" + name, [&] {
      s = finetune_tasks(*adapted, vocab, profile, fx, ckpt_dir, name);
    });
    record(column_name(strategy), s, extra);
  }

  PipelineResult result;
  result.metrics = metrics;
  result.summary = summary_table(metrics);
  write_json(options.out / "metrics.json", metrics);
  write_json(options.out / "timings.json", timings);
  std::ofstream(options.out / "summary.txt") << result.summary;
  return result;
}

std::string summary_table(const nlohmann::json& metrics) {
  const std::vector<std::string> columns = {"base", "+E_D", "+M_D+E_D", "+M_D+M_WIKI"};
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"ner (span F1)", "ner_test_f1"}, {"clf (micro F1)", "clf_test_micro_f1"}};
  std::ostringstream out;
  out << std::left << std::setw(16) << "task";
  for (const auto& c : columns) out << std::right << std::setw(13) << c;
  out << '\n';
  const auto& cols = metrics.at("columns");
  for (const auto& [label, key] : rows) {
    out << std::left << std::setw(16) << label;
    for (const auto& c : columns) {
      out << std::right << std::setw(13);
      if (cols.contains(c) && cols.at(c).contains(key)) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(4) << cols.at(c).at(key).get<double>();
        out << cell.str();
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mdapt::cli
