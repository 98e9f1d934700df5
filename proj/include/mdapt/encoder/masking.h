#pragma once

#include <span>
#include <vector>

#include "mdapt/common/rng.h"
#include "mdapt/encoder/autograd.h"
#include "mdapt/tokenizer/vocabulary.h"

namespace mdapt::encoder {

using tokenizer::TokenId;

enum class MaskAction { kMask, kRandom, kKeep };

struct MaskingOptions {
  double rate = 0.15;
  double mask_frac = 0.8;
  double random_frac = 0.1;  // the rest of the selected positions are kept
};

struct MaskingPlan {
  std::vector<size_t> positions;  // ascending
  std::vector<MaskAction> actions;
  std::vector<TokenId> original_ids;

  bool empty() const { return positions.empty(); }
};

struct MaskedSequence {
  MaskingPlan plan;
  std::vector<TokenId> corrupted;
};

// [CLS], [SEP], [PAD] and [MASK] positions are never selected.
bool is_maskable(TokenId id);

// Selects ceil(rate * maskable) positions uniformly without replacement, then
// draws an action per position: [MASK] with probability mask_frac, a uniform
// non-special id with probability random_frac, otherwise unchanged.
// Throws UsageError for fractions outside [0, 1] or summing above 1.
MaskedSequence make_masking_plan(std::span<const TokenId> ids, size_t vocab_size,
                                 const MaskingOptions& options, Rng& rng);

template <typename T>
struct MlmLoss {
  autograd::Var<T> loss;  // 1x1
  bool empty_plan = false;
};

// Mean negative log-likelihood of the original ids under `logits` (one row per
// selected position). An empty plan yields a constant 0 and sets empty_plan.
template <typename T>
MlmLoss<T> mlm_loss(const autograd::Var<T>& logits, const MaskingPlan& plan);

}  // namespace mdapt::encoder
