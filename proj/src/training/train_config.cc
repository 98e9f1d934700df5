#include "mdapt/training/train_config.h"

#include <algorithm>

#include "mdapt/common/error.h"

namespace mdapt::training {

double TrainConfig::lr_scale(int step) const {
  if (warmup_steps <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(step + 1) / warmup_steps);
}

void TrainConfig::validate() const {
  if (effective_batch <= 0 || micro_batch <= 0) {
    throw UsageError("train config: batch sizes must be positive");
  }
  if (effective_batch % micro_batch != 0) {
    throw UsageError("train config: effective_batch " + std::to_string(effective_batch) +
                     " is not a multiple of micro_batch " + std::to_string(micro_batch));
  }
  if (!(learning_rate >= 0.0)) throw UsageError("train config: learning_rate must be >= 0");
  if (max_seq_len < 2) throw UsageError("train config: max_seq_len must be >= 2");
  if (early_stop_patience < 1) throw UsageError("train config: patience must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"mode", c.mode == TrainMode::kFull ? "full" : "adapter"},
          {"learning_rate", c.learning_rate},
          {"effective_batch", c.effective_batch},
          {"micro_batch", c.micro_batch},
          {"max_steps", c.max_steps},
          {"max_epochs", c.max_epochs},
          {"early_stop_patience", c.early_stop_patience},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"weight_decay", c.weight_decay},
          {"warmup_steps", c.warmup_steps},
          {"max_seq_len", c.max_seq_len},
          {"adapter_dim", c.adapter_dim},
          {"mask_rate", c.masking.rate},
          {"mask_frac", c.masking.mask_frac},
          {"random_frac", c.masking.random_frac},
          {"dev_metric", c.dev_metric == DevMetric::kSpanF1 ? "span_f1" : "loss"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode != "full" && mode != "adapter") throw UsageError("train config: bad mode " + mode);
      c.mode = mode == "full" ? TrainMode::kFull : TrainMode::kAdapter;
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.effective_batch = j.value("effective_batch", c.effective_batch);
    c.micro_batch = j.value("micro_batch", c.micro_batch);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.adapter_dim = j.value("adapter_dim", c.adapter_dim);
    c.masking.rate = j.value("mask_rate", c.masking.rate);
    c.masking.mask_frac = j.value("mask_frac", c.masking.mask_frac);
    c.masking.random_frac = j.value("random_frac", c.masking.random_frac);
    if (j.contains("dev_metric")) {
      const auto m = j.at("dev_metric").get<std::string>();
      if (m != "span_f1" && m != "loss") throw UsageError("train config: bad dev_metric " + m);
      c.dev_metric = m == "span_f1" ? DevMetric::kSpanF1 : DevMetric::kLoss;
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed train config: ") + e.what());
  }
  return c;
}

nlohmann::json RunRecord::to_json() const {
  return {{"seed", seed},
          {"loss_trace", loss_trace},
          {"best_dev_metric", best_dev_metric},
          {"checkpoint_path", checkpoint_path},
          {"wall_clock_seconds", wall_clock_seconds}};
}

}  // namespace mdapt::training
