#include "mdapt/encoder/optimizer.h"

#include <cmath>

#include "mdapt/common/error.h"

namespace mdapt::encoder {

template <typename T>
void AdamW<T>::step(ParameterStore<T>& params, double lr_scale) {
  for (const auto& p : params.all()) {
    if (p.var.requires_grad() && p.var.has_grad() && !p.var.grad().allFinite()) {
      throw NumericError("non-finite gradient in tensor " + p.name);
    }
  }
  ++t_;
  const double lr = options_.learning_rate * lr_scale;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);

  for (auto& p : params.all()) {
    if (!p.var.requires_grad() || !p.var.has_grad()) continue;
    const Matrix<T>& g = p.var.grad();
    auto [it, fresh] = state_.try_emplace(p.name);
    Moments& s = it->second;
    if (fresh) {
      s.m = Matrix<T>::Zero(g.rows(), g.cols());
      s.v = Matrix<T>::Zero(g.rows(), g.cols());
    }
    s.m = b1 * s.m + (T(1) - b1) * g;
    s.v = b2 * s.v + (T(1) - b2) * g.cwiseProduct(g);
    if (lr == 0.0) continue;

    Matrix<T>& w = p.var.mutable_value();
    if (p.weight_decay && options_.weight_decay != 0.0) {
      w *= static_cast<T>(1.0 - lr * options_.weight_decay);
    }
    const T step = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(options_.epsilon);
    w.array() -= step * s.m.array() / ((s.v.array() * inv_bc2).sqrt() + eps);
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace mdapt::encoder
