#pragma once

#include <cstdint>
#include <unordered_map>

#include "mdapt/encoder/parameters.h"

namespace mdapt::encoder {

struct AdamWOptions {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Only parameters that currently require
// gradients are touched; frozen tensors are never written.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWOptions options) : options_(options) {}

  // One update from the accumulated gradients. `lr_scale` multiplies the
  // base learning rate (schedules). Throws NumericError naming the first
  // tensor with a non-finite gradient, before anything is modified.
  void step(ParameterStore<T>& params, double lr_scale = 1.0);

  int64_t steps() const { return t_; }
  const AdamWOptions& options() const { return options_; }

 private:
  struct Moments {
    Matrix<T> m;
    Matrix<T> v;
  };
  AdamWOptions options_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace mdapt::encoder
