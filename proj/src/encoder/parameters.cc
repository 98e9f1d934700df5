#include "mdapt/encoder/parameters.h"

#include <stdexcept>

#include "mdapt/common/hash.h"

namespace mdapt::encoder {

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kBase: return "base";
    case ParamGroup::kAdapter: return "adapter";
    case ParamGroup::kHead: return "head";
  }
  return "?";
}

template <typename T>
Var<T> ParameterStore<T>::add(std::string name, ParamGroup group, Matrix<T> init,
                              bool weight_decay) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter " + name);
  }
  Var<T> var = Var<T>::leaf(std::move(init), is_trainable(group, trainable_));
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), group, weight_decay, var});
  return var;
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
const Parameter<T>* ParameterStore<T>::find(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->find(name);
}

template <typename T>
Parameter<T>& ParameterStore<T>::at(std::string_view name) {
  Parameter<T>* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter " + std::string(name));
  return *p;
}

template <typename T>
const Parameter<T>& ParameterStore<T>::at(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

template <typename T>
void ParameterStore<T>::set_trainable(TrainableSet set) {
  trainable_ = set;
  for (auto& p : params_) {
    const bool on = is_trainable(p.group, set);
    p.var.set_requires_grad(on);
    if (!on) p.var.clear_grad();
  }
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) {
    if (p.var.has_grad()) p.var.node()->grad.setZero();
  }
}

template <typename T>
size_t ParameterStore<T>::count(ParamGroup g) const {
  size_t n = 0;
  for (const auto& p : params_) {
    if (p.group == g) n += static_cast<size_t>(p.var.value().size());
  }
  return n;
}

template <typename T>
std::string ParameterStore<T>::fingerprint(ParamGroup group) const {
  Sha256 h;
  for (const auto& p : params_) {
    if (p.group != group) continue;
    h.update_field(p.name);
    h.update(p.var.value().data(), sizeof(T) * static_cast<size_t>(p.var.value().size()));
  }
  return h.hex_digest();
}

template <typename T>
ParameterStore<T> ParameterStore<T>::clone() const {
  ParameterStore out;
  out.trainable_ = trainable_;
  out.index_ = index_;
  for (const auto& p : params_) {
    out.params_.push_back(
        {p.name, p.group, p.weight_decay,
         Var<T>::leaf(p.var.value(), is_trainable(p.group, trainable_))});
  }
  return out;
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace mdapt::encoder
