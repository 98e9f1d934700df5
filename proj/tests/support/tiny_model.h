#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mdapt/encoder/encoder.h"
#include "mdapt/encoder/masking.h"
#include "oracles.h"

namespace testing {

// L=1, d=4, h=2, ff=8, vocab=11 in double precision, with adapters (their
// up-projections nudged off zero so every path carries gradient) and a
// three-way head. The loss combines masked-LM and head cross-entropy.
struct TinyModel {
  mdapt::encoder::Encoder<double> model;
  std::vector<int32_t> ids{0, 5, 7, 2, 9, 1};
  std::vector<size_t> mlm_positions{2, 3};
  std::vector<int32_t> mlm_targets{6, 8};
  std::vector<size_t> head_positions{1, 4};
  std::vector<int32_t> head_targets{2, 0};

  TinyModel() : model(mdapt::encoder::EncoderConfig{1, 4, 2, 8, 8, 11, std::nullopt, 0.0}, 3) {
    model.add_adapters(3, 5);
    model.add_head("h", 3, 7);
    for (auto& p : model.params().all()) {
      if (!p.name.ends_with("adapter.up")) continue;
      auto& v = p.var.mutable_value();
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = 0.02 * std::sin(1.7 * i + 1.0);
    }
  }

  mdapt::autograd::Var<double> loss() const {
    using namespace mdapt;
    const auto h = model.forward(ids, encoder::Mode::kEval).final();
    const auto a = autograd::cross_entropy(model.mlm_logits(h, mlm_positions),
                                           std::span<const int32_t>(mlm_targets));
    const auto b = autograd::cross_entropy(
        model.apply_head("h", autograd::select_rows(h, head_positions)),
        std::span<const int32_t>(head_targets));
    return autograd::add(a, b);
  }

  oracle::GradCheck check(mdapt::encoder::TrainableSet set, double eps = 1e-4,
                          double floor = 1e-6) {
    model.set_trainable(set);
    return oracle::check_gradients(model.params(), [this] { return loss(); }, eps, floor);
  }
};

}  // namespace testing
