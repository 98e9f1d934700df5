#include "mdapt/encoder/masking.h"

#include <algorithm>
#include <cmath>

#include "mdapt/common/error.h"

namespace mdapt::encoder {

bool is_maskable(TokenId id) {
  return id != tokenizer::kClsId && id != tokenizer::kSepId && id != tokenizer::kPadId &&
         id != tokenizer::kMaskId;
}

MaskedSequence make_masking_plan(std::span<const TokenId> ids, size_t vocab_size,
                                 const MaskingOptions& options, Rng& rng) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(options.rate) || !in_unit(options.mask_frac) || !in_unit(options.random_frac) ||
      options.mask_frac + options.random_frac > 1.0 + 1e-12) {
    throw UsageError("masking fractions must lie in [0, 1] with mask + random <= 1");
  }
  MaskedSequence out;
  out.corrupted.assign(ids.begin(), ids.end());

  std::vector<size_t> candidates;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (is_maskable(ids[i])) candidates.push_back(i);
  }
  // The epsilon keeps e.g. 0.15 * 100 from rounding up to 16.
  const auto wanted = static_cast<size_t>(
      std::ceil(options.rate * static_cast<double>(candidates.size()) - 1e-9));
  const size_t count = std::min(wanted, candidates.size());
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + rng.uniform_index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());

  const size_t random_span =
      vocab_size > static_cast<size_t>(tokenizer::kNumSpecialTokens)
          ? vocab_size - tokenizer::kNumSpecialTokens
          : 0;
  for (size_t pos : candidates) {
    const double u = rng.uniform01();
    MaskAction action = MaskAction::kKeep;
    if (u < options.mask_frac) {
      action = MaskAction::kMask;
      out.corrupted[pos] = tokenizer::kMaskId;
    } else if (u < options.mask_frac + options.random_frac && random_span > 0) {
      action = MaskAction::kRandom;
      out.corrupted[pos] =
          tokenizer::kNumSpecialTokens + static_cast<TokenId>(rng.uniform_index(random_span));
    }
    out.plan.positions.push_back(pos);
    out.plan.actions.push_back(action);
    out.plan.original_ids.push_back(ids[pos]);
  }
  return out;
}

template <typename T>
MlmLoss<T> mlm_loss(const autograd::Var<T>& logits, const MaskingPlan& plan) {
  MlmLoss<T> out;
  if (plan.empty()) {
    out.loss = autograd::Var<T>::constant(autograd::Matrix<T>::Zero(1, 1));
    out.empty_plan = true;
    return out;
  }
  out.loss = autograd::cross_entropy(logits, std::span<const TokenId>(plan.original_ids));
  return out;
}

template MlmLoss<float> mlm_loss(const autograd::Var<float>&, const MaskingPlan&);
template MlmLoss<double> mlm_loss(const autograd::Var<double>&, const MaskingPlan&);

}  // namespace mdapt::encoder
