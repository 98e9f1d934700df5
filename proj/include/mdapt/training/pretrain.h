#pragma once

#include <filesystem>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/encoder/encoder.h"
#include "mdapt/encoder/masking.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "mdapt/training/train_config.h"

namespace mdapt::training {

using encoder::Encoder;
using tokenizer::TokenId;
using Sequence = std::vector<TokenId>;

// One [CLS] ... [SEP] sequence per text; texts that produce no subtokens are
// dropped.
std::vector<Sequence> encode_texts(const std::vector<std::string>& texts,
                                   const tokenizer::Vocabulary& vocab, size_t max_len);

// Forward/backward for one micro-batch. Example i is masked with an Rng seeded
// by example_seeds[i], its loss is the mean NLL over its masked positions, and
// the gradient of scale * sum(losses) is added to the trainable parameters.
// Returns the unscaled sum of per-example losses.
template <typename T>
double accumulate_mlm_gradients(Encoder<T>& model, std::span<const Sequence> examples,
                                std::span<const uint64_t> example_seeds, double scale,
                                const encoder::MaskingOptions& masking);

struct PretrainOptions {
  std::filesystem::path checkpoint_path;  // empty: no file output
  std::set<encoder::ParamGroup> save_groups = {encoder::ParamGroup::kBase,
                                               encoder::ParamGroup::kAdapter};
  int checkpoint_every = 0;  // 0: only at the end
  nlohmann::json meta = nlohmann::json::object();
  // Called after every completed step (and after any periodic save).
  std::function<void(int step, double loss)> on_step;
};

// Masked-LM training for cfg.max_steps optimizer steps of cfg.effective_batch
// sequences, accumulated over micro-batches. In adapter mode only adapter
// (and head) tensors change; the model must already carry adapters.
//
// A non-finite loss or gradient aborts with NumericError. The checkpoint file
// is then left at the last step that completed cleanly.
RunRecord pretrain_mlm(Encoder<float>& model, const std::vector<Sequence>& sequences,
                       const TrainConfig& cfg, const PretrainOptions& options = {});

// Mean per-sequence masked-LM loss with a fixed masking seed, in eval mode.
double evaluate_mlm_loss(const Encoder<float>& model, const std::vector<Sequence>& sequences,
                         const encoder::MaskingOptions& masking, uint64_t seed);

}  // namespace mdapt::training
