#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mdapt/encoder/encoder.h"
#include "mdapt/evaluation/metrics.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "mdapt/training/train_config.h"

namespace mdapt::training {

struct NerSentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;
};

// Two columns per line (word, BIO tag), blank lines between sentences,
// "-DOCSTART-" lines ignored. Throws DataError with the offending line number.
std::vector<NerSentence> read_conll(const std::filesystem::path& path);
void write_conll(const std::filesystem::path& path, const std::vector<NerSentence>& sentences);

struct NerDataset {
  std::vector<NerSentence> train;
  std::vector<NerSentence> dev;
  std::vector<NerSentence> test;
};

// "O" followed by B-X, I-X for every entity type X in `sentences`, sorted.
// Throws DataError for a tag outside the BIO scheme.
std::vector<std::string> ner_label_set(const std::vector<NerSentence>& sentences);

inline constexpr const char* kNerHead = "ner";

// Predicted tags per word. Words cut off by the length limit get "O", so
// entities on them count as missed.
std::vector<std::vector<std::string>> predict_ner(const encoder::Encoder<float>& model,
                                                  const tokenizer::Vocabulary& vocab,
                                                  const std::vector<NerSentence>& sentences,
                                                  const std::vector<std::string>& labels,
                                                  size_t max_len);

evaluation::PrecisionRecallF1 evaluate_ner(const encoder::Encoder<float>& model,
                                           const tokenizer::Vocabulary& vocab,
                                           const std::vector<NerSentence>& sentences,
                                           const std::vector<std::string>& labels,
                                           size_t max_len);

struct NerResult {
  std::vector<std::string> labels;
  double best_dev_metric = 0.0;  // span F1, or negated loss
  evaluation::PrecisionRecallF1 test;
  int epochs_run = 0;
  int best_epoch = -1;
  RunRecord record;
};

// Token classification with a linear head on each word's first subtoken.
// Early stopping watches the dev set; the model is left at its best epoch.
NerResult finetune_ner(encoder::Encoder<float>& model, const tokenizer::Vocabulary& vocab,
                       const NerDataset& data, const TrainConfig& cfg);

}  // namespace mdapt::training
