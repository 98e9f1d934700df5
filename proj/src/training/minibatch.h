#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"
#include "mdapt/encoder/encoder.h"
#include "mdapt/encoder/optimizer.h"

namespace mdapt::training::detail {

// Per-example loss; nullopt skips the example (nothing left after truncation).
using ExampleLoss = std::function<std::optional<autograd::Var<float>>(size_t index)>;

// One shuffled pass over `count` examples. Each optimizer step averages the
// per-example losses of `batch` examples, back-propagated `micro` at a time.
// Returns the mean training loss of the epoch.
inline double train_epoch(encoder::Encoder<float>& model, encoder::AdamW<float>& optimizer,
                          size_t count, size_t batch, size_t micro, Rng order_rng,
                          const ExampleLoss& loss_of, const std::function<double()>& lr_scale) {
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), size_t{0});
  order_rng.shuffle(order.begin(), order.end());
  double loss_sum = 0.0;
  size_t seen = 0;
  for (size_t start = 0; start < count; start += batch) {
    const size_t end = std::min(count, start + batch);
    const auto scale = 1.0f / static_cast<float>(end - start);
    model.params().zero_grad();
    for (size_t m = start; m < end; m += micro) {
      std::optional<autograd::Var<float>> total;
      for (size_t i = m; i < std::min(end, m + micro); ++i) {
        auto loss = loss_of(order[i]);
        if (!loss) continue;
        loss_sum += static_cast<double>(loss->scalar());
        ++seen;
        total = total ? autograd::add(*total, *loss) : *loss;
      }
      if (total) autograd::backward(autograd::scale(*total, scale));
    }
    if (!std::isfinite(loss_sum)) throw NumericError("fine-tuning: non-finite loss");
    optimizer.step(model.params(), lr_scale());
  }
  model.params().zero_grad();
  return seen == 0 ? 0.0 : loss_sum / static_cast<double>(seen);
}

}  // namespace mdapt::training::detail
