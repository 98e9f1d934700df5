#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/encoder/masking.h"
#include "mdapt/encoder/optimizer.h"

namespace mdapt::training {

enum class TrainMode { kFull, kAdapter };

// What early stopping watches during NER fine-tuning.
enum class DevMetric { kSpanF1, kLoss };

struct TrainConfig {
  TrainMode mode = TrainMode::kFull;
  double learning_rate = 5e-5;
  int effective_batch = 32;
  int micro_batch = 32;
  int max_steps = 0;   // pretraining
  int max_epochs = 1;  // fine-tuning
  int early_stop_patience = 25;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  int warmup_steps = 0;  // linear warmup, then constant
  int max_seq_len = 128;
  int adapter_dim = 16;  // used when adapter mode has to insert adapters
  encoder::MaskingOptions masking;
  DevMetric dev_metric = DevMetric::kSpanF1;

  int grad_accum_steps() const { return effective_batch / micro_batch; }
  encoder::AdamWOptions adamw() const {
    return {learning_rate, beta1, beta2, epsilon, weight_decay};
  }
  double lr_scale(int step) const;

  // Throws UsageError when a batch is non-positive, effective_batch is not a
  // multiple of micro_batch, or the learning rate is negative.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep the values already in `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct RunRecord {
  uint64_t seed = 0;
  std::vector<double> loss_trace;
  double best_dev_metric = 0.0;
  std::string checkpoint_path;
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const;
};

}  // namespace mdapt::training
