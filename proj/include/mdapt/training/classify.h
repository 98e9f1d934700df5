#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mdapt/encoder/encoder.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "mdapt/training/train_config.h"

namespace mdapt::training {

struct LabeledSentence {
  std::string text;
  std::string label;
};

// JSON lines with "text" and "label". Throws DataError with a line number.
std::vector<LabeledSentence> read_labeled_jsonl(const std::filesystem::path& path);
void write_labeled_jsonl(const std::filesystem::path& path,
                         const std::vector<LabeledSentence>& data);

struct ClassificationSplits {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> dev;
  std::vector<LabeledSentence> test;
};

// Per label: shuffle, then round(fraction * n) examples go to the held-out
// side. Throws DataError when fewer than two labels are present.
std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>> stratified_split(
    const std::vector<LabeledSentence>& data, double held_out_fraction, uint64_t seed);

// 80/20 train/test, then 20% of the training part as dev.
ClassificationSplits make_classification_splits(const std::vector<LabeledSentence>& data,
                                                uint64_t seed);

struct GridCell {
  int batch_size = 16;
  int epochs = 2;
};

// Batch sizes {16, 32} crossed with epochs {2, 4, 6}.
std::vector<GridCell> default_grid();

struct GridResult {
  GridCell cell;
  double dev_metric = 0.0;
};

// Index of the best dev metric; the earliest cell wins ties.
size_t select_grid_cell(const std::vector<GridResult>& results);

inline constexpr const char* kClassifierHead = "clf";

std::vector<std::string> predict_labels(const encoder::Encoder<float>& model,
                                        const tokenizer::Vocabulary& vocab,
                                        const std::vector<LabeledSentence>& data,
                                        const std::vector<std::string>& labels, size_t max_len);

double evaluate_classifier(const encoder::Encoder<float>& model,
                           const tokenizer::Vocabulary& vocab,
                           const std::vector<LabeledSentence>& data,
                           const std::vector<std::string>& labels, size_t max_len);

struct ClassifyResult {
  std::vector<std::string> labels;
  std::vector<GridResult> grid;
  size_t selected = 0;
  double test_metric = 0.0;  // micro-F1 of the selected cell
  RunRecord record;
};

// Trains a [CLS] classifier from `model` once per grid cell and keeps the
// cell with the best dev micro-F1; `model` is replaced by that fine-tuned copy.
ClassifyResult finetune_classify(encoder::Encoder<float>& model,
                                 const tokenizer::Vocabulary& vocab,
                                 const ClassificationSplits& data, const TrainConfig& cfg,
                                 const std::vector<GridCell>& grid);

}  // namespace mdapt::training
