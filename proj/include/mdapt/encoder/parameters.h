#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdapt/encoder/autograd.h"

namespace mdapt::encoder {

using autograd::Matrix;
using autograd::Var;

enum class ParamGroup { kBase, kAdapter, kHead };

std::string_view group_name(ParamGroup g);

// Which parameters receive gradients.
enum class TrainableSet {
  kAll,
  kAdaptersAndHeads,  // base encoder frozen
};

template <typename T>
struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kBase;
  bool weight_decay = true;
  Var<T> var;
};

// Owns every named tensor of a model in registration order.
template <typename T>
class ParameterStore {
 public:
  Var<T> add(std::string name, ParamGroup group, Matrix<T> init, bool weight_decay);

  Parameter<T>* find(std::string_view name);
  const Parameter<T>* find(std::string_view name) const;
  // Throws std::out_of_range for an unknown name.
  Parameter<T>& at(std::string_view name);
  const Parameter<T>& at(std::string_view name) const;

  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }

  void set_trainable(TrainableSet set);
  TrainableSet trainable_set() const { return trainable_; }
  static bool is_trainable(ParamGroup g, TrainableSet set) {
    return set == TrainableSet::kAll || g != ParamGroup::kBase;
  }

  void zero_grad();
  size_t count(ParamGroup g) const;  // scalar count

  // SHA-256 over the raw bytes of every tensor of `group`, in order.
  std::string fingerprint(ParamGroup group) const;

  // Deep copy: fresh leaves with copied values, no gradients.
  ParameterStore clone() const;

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, size_t> index_;
  TrainableSet trainable_ = TrainableSet::kAll;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace mdapt::encoder
