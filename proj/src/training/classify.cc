#include "mdapt/training/classify.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "mdapt/common/error.h"
#include "mdapt/evaluation/metrics.h"
#include "mdapt/tokenizer/wordpiece.h"
#include "minibatch.h"

namespace mdapt::training {
namespace {

using encoder::Encoder;
using encoder::Mode;

size_t effective_max_len(const Encoder<float>& model, size_t requested) {
  return std::min(requested, static_cast<size_t>(model.config().max_seq_len));
}

std::vector<std::string> label_set(const std::vector<LabeledSentence>& data) {
  std::set<std::string> labels;
  for (const auto& x : data) labels.insert(x.label);
  return {labels.begin(), labels.end()};
}

}  // namespace

std::vector<LabeledSentence> read_labeled_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<LabeledSentence> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("text").get<std::string>(), j.at("label").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_labeled_jsonl(const std::filesystem::path& path,
                         const std::vector<LabeledSentence>& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& x : data) out << nlohmann::json{{"text", x.text}, {"label", x.label}}.dump() << '\n';
}

std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>> stratified_split(
    const std::vector<LabeledSentence>& data, double held_out_fraction, uint64_t seed) {
  if (held_out_fraction < 0.0 || held_out_fraction > 1.0) {
    throw UsageError("stratified_split: fraction must lie in [0, 1]");
  }
  std::map<std::string, std::vector<size_t>> by_label;
  for (size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);
  if (by_label.size() < 2) throw DataError("classification data needs at least two labels");
  std::vector<size_t> kept;
  std::vector<size_t> held;
  const Rng root(seed);
  for (auto& [label, idx] : by_label) {
    root.fork("split:" + label).shuffle(idx.begin(), idx.end());
    const auto n_held =
        static_cast<size_t>(std::floor(held_out_fraction * static_cast<double>(idx.size()) + 0.5));
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_held));
    kept.insert(kept.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_held), idx.end());
  }
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());
  std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>> out;
  for (size_t i : kept) out.first.push_back(data[i]);
  for (size_t i : held) out.second.push_back(data[i]);
  return out;
}

ClassificationSplits make_classification_splits(const std::vector<LabeledSentence>& data,
                                                uint64_t seed) {
  auto [rest, test] = stratified_split(data, 0.2, Rng::derive_seed(seed, "test"));
  auto [train, dev] = stratified_split(rest, 0.2, Rng::derive_seed(seed, "dev"));
  return {std::move(train), std::move(dev), std::move(test)};
}

std::vector<GridCell> default_grid() {
  std::vector<GridCell> grid;
  for (int batch : {16, 32}) {
    for (int epochs : {2, 4, 6}) grid.push_back({batch, epochs});
  }
  return grid;
}

size_t select_grid_cell(const std::vector<GridResult>& results) {
  if (results.empty()) throw UsageError("select_grid_cell: empty grid");
  size_t best = 0;
  for (size_t i = 1; i < results.size(); ++i) {
    if (results[i].dev_metric > results[best].dev_metric) best = i;
  }
  return best;
}

std::vector<std::string> predict_labels(const Encoder<float>& model,
                                        const tokenizer::Vocabulary& vocab,
                                        const std::vector<LabeledSentence>& data,
                                        const std::vector<std::string>& labels, size_t max_len) {
  max_len = effective_max_len(model, max_len);
  std::vector<std::string> out;
  out.reserve(data.size());
  const std::vector<size_t> cls_row{0};
  for (const auto& x : data) {
    const auto enc = tokenizer::encode(x.text, vocab, max_len);
    const auto hidden = model.forward(enc.subtoken_ids, Mode::kEval).final();
    const auto logits = model.apply_head(kClassifierHead, autograd::select_rows(hidden, cls_row));
    Eigen::Index best = 0;
    logits.value().row(0).maxCoeff(&best);
    out.push_back(labels.at(static_cast<size_t>(best)));
  }
  return out;
}

double evaluate_classifier(const Encoder<float>& model, const tokenizer::Vocabulary& vocab,
                           const std::vector<LabeledSentence>& data,
                           const std::vector<std::string>& labels, size_t max_len) {
  std::vector<std::string> gold;
  gold.reserve(data.size());
  for (const auto& x : data) gold.push_back(x.label);
  return evaluation::sentence_micro_f1(gold, predict_labels(model, vocab, data, labels, max_len));
}

ClassifyResult finetune_classify(Encoder<float>& model, const tokenizer::Vocabulary& vocab,
                                 const ClassificationSplits& data, const TrainConfig& cfg,
                                 const std::vector<GridCell>& grid) {
  cfg.validate();
  if (data.train.empty() || data.dev.empty()) {
    throw DataError("finetune_classify: train and dev splits must be non-empty");
  }
  if (grid.empty()) throw UsageError("finetune_classify: empty hyper-parameter grid");
  if (cfg.mode == TrainMode::kAdapter && !model.has_adapters()) {
    throw UsageError("finetune_classify: adapter mode needs a model with adapters");
  }
  const auto started = std::chrono::steady_clock::now();
  ClassifyResult result;
  result.labels = label_set(data.train);
  if (result.labels.size() < 2) throw DataError("classification data needs at least two labels");
  std::map<std::string, int32_t> label_ids;
  for (size_t i = 0; i < result.labels.size(); ++i) {
    label_ids[result.labels[i]] = static_cast<int32_t>(i);
  }
  for (const auto& part : {&data.dev, &data.test}) {
    for (const auto& x : *part) {
      if (!label_ids.count(x.label)) {
        throw DataError("label '" + x.label + "' does not occur in the training split");
      }
    }
  }
  const size_t max_len = effective_max_len(model, static_cast<size_t>(cfg.max_seq_len));
  std::vector<std::vector<tokenizer::TokenId>> train_ids;
  std::vector<int32_t> train_targets;
  for (const auto& x : data.train) {
    train_ids.push_back(tokenizer::encode(x.text, vocab, max_len).subtoken_ids);
    train_targets.push_back(label_ids.at(x.label));
  }

  std::optional<Encoder<float>> best_model;
  const std::vector<size_t> cls_row{0};
  for (size_t c = 0; c < grid.size(); ++c) {
    const GridCell cell = grid[c];
    if (cell.batch_size <= 0 || cell.epochs <= 0) throw UsageError("grid cells must be positive");
    Encoder<float> candidate = model;
    if (candidate.has_head(kClassifierHead)) {
      throw UsageError("finetune_classify: model already has a classifier head");
    }
    candidate.add_head(kClassifierHead, static_cast<int>(result.labels.size()),
                       Rng::derive_seed(cfg.seed, "clf-head"));
    candidate.set_trainable(cfg.mode == TrainMode::kFull
                                ? encoder::TrainableSet::kAll
                                : encoder::TrainableSet::kAdaptersAndHeads);
    encoder::AdamW<float> optimizer(cfg.adamw());
    const auto batch = static_cast<size_t>(cell.batch_size);
    const size_t micro =
        batch % static_cast<size_t>(cfg.micro_batch) == 0 ? static_cast<size_t>(cfg.micro_batch)
                                                          : batch;
    const Rng root(Rng::derive_seed(cfg.seed, static_cast<uint64_t>(c)));
    Rng dropout_rng = root.fork("dropout");
    int step = 0;
    for (int epoch = 0; epoch < cell.epochs; ++epoch) {
      const double loss = detail::train_epoch(
          candidate, optimizer, train_ids.size(), batch, micro,
          root.fork("epoch-" + std::to_string(epoch)),
          [&](size_t i) -> std::optional<autograd::Var<float>> {
            const auto hidden =
                candidate.forward(train_ids[i], Mode::kTrain, &dropout_rng).final();
            const auto logits =
                candidate.apply_head(kClassifierHead, autograd::select_rows(hidden, cls_row));
            return autograd::cross_entropy(logits, std::span<const int32_t>(&train_targets[i], 1));
          },
          [&] { return cfg.lr_scale(step++); });
      if (c == 0) result.record.loss_trace.push_back(loss);
    }
    const double dev = evaluate_classifier(candidate, vocab, data.dev, result.labels, max_len);
    result.grid.push_back({cell, dev});
    if (select_grid_cell(result.grid) == c) best_model = std::move(candidate);
  }
  result.selected = select_grid_cell(result.grid);
  model = std::move(*best_model);
  if (!data.test.empty()) {
    result.test_metric = evaluate_classifier(model, vocab, data.test, result.labels, max_len);
  }
  result.record.seed = cfg.seed;
  result.record.best_dev_metric = result.grid[result.selected].dev_metric;
  result.record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace mdapt::training
