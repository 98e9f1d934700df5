#include "mdapt/encoder/encoder.h"

#include <cmath>
#include <stdexcept>

#include "mdapt/common/error.h"

namespace mdapt::encoder {
namespace {

std::string layer_prefix(int layer) { return "layer." + std::to_string(layer) + "."; }

template <typename T>
Matrix<T> truncated_normal(Eigen::Index rows, Eigen::Index cols, Rng rng) {
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>(rng.truncated_normal(kInitStddev));
  }
  return m;
}

}  // namespace

template <typename T>
Var<T> adapter_apply(const Var<T>& h, const Var<T>& r, const Var<T>& down,
                     const Var<T>& up) {
  if (h.cols() != down.rows() || down.cols() != up.rows() || up.cols() != r.cols() ||
      h.rows() != r.rows()) {
    throw std::invalid_argument("adapter_apply: shape mismatch");
  }
  return autograd::add(autograd::matmul(autograd::relu(autograd::matmul(h, down)), up), r);
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, uint64_t seed) : config_(config) {
  config_.validate();
  const Rng root(seed);
  const auto d = config_.hidden_dim;
  auto weight = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    store_.add(name, ParamGroup::kBase, truncated_normal<T>(rows, cols, root.fork(name)), true);
  };
  auto bias = [&](const std::string& name, Eigen::Index cols) {
    store_.add(name, ParamGroup::kBase, Matrix<T>::Zero(1, cols), false);
  };
  auto norm = [&](const std::string& prefix) {
    store_.add(prefix + "gamma", ParamGroup::kBase, Matrix<T>::Ones(1, d), false);
    store_.add(prefix + "beta", ParamGroup::kBase, Matrix<T>::Zero(1, d), false);
  };

  weight("embeddings.token", config_.vocab_size, d);
  weight("embeddings.position", config_.max_seq_len, d);
  norm("embeddings.norm.");
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* proj : {"query", "key", "value", "output"}) {
      weight(p + "attention." + proj + ".weight", d, d);
      bias(p + "attention." + proj + ".bias", d);
    }
    norm(p + "attention.norm.");
    weight(p + "ffn.in.weight", d, config_.ff_dim);
    bias(p + "ffn.in.bias", config_.ff_dim);
    weight(p + "ffn.out.weight", config_.ff_dim, d);
    bias(p + "ffn.out.bias", d);
    norm(p + "ffn.norm.");
  }
  weight("mlm.transform.weight", d, d);
  bias("mlm.transform.bias", d);
  norm("mlm.transform.norm.");
  bias("mlm.decoder.bias", config_.vocab_size);

  if (config_.adapter_dim) {
    const int b = *config_.adapter_dim;
    config_.adapter_dim.reset();
    add_adapters(b, Rng::derive_seed(seed, "adapters"));
  }
}

template <typename T>
Encoder<T>::Encoder(const Encoder& other)
    : config_(other.config_), store_(other.store_.clone()) {}

template <typename T>
Encoder<T>& Encoder<T>::operator=(const Encoder& other) {
  if (this != &other) {
    config_ = other.config_;
    store_ = other.store_.clone();
  }
  return *this;
}

template <typename T>
void Encoder<T>::add_adapters(int adapter_dim, uint64_t seed) {
  if (config_.adapter_dim) throw UsageError("encoder already has adapters");
  if (adapter_dim <= 0) throw UsageError("adapter_dim must be positive");
  const Rng root(seed);
  const auto d = config_.hidden_dim;
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = layer_prefix(l) + "adapter.";
    store_.add(p + "down", ParamGroup::kAdapter,
               truncated_normal<T>(d, adapter_dim, root.fork(p + "down")), true);
    store_.add(p + "up", ParamGroup::kAdapter, Matrix<T>::Zero(adapter_dim, d), true);
  }
  config_.adapter_dim = adapter_dim;
}

template <typename T>
void Encoder<T>::add_head(const std::string& name, int out_dim, uint64_t seed) {
  if (out_dim <= 0) throw UsageError("head " + name + ": out_dim must be positive");
  const std::string p = "head." + name + ".";
  const Rng root(seed);
  for (auto* existing : {store_.find(p + "weight"), store_.find(p + "bias")}) {
    if (existing != nullptr) throw UsageError("head " + name + " already exists");
  }
  store_.add(p + "weight", ParamGroup::kHead,
             truncated_normal<T>(config_.hidden_dim, out_dim, root.fork(p + "weight")), true);
  store_.add(p + "bias", ParamGroup::kHead, Matrix<T>::Zero(1, out_dim), false);
}

template <typename T>
bool Encoder<T>::has_head(const std::string& name) const {
  return store_.find("head." + name + ".weight") != nullptr;
}

template <typename T>
Var<T> Encoder<T>::apply_head(const std::string& name, const Var<T>& x) const {
  const std::string p = "head." + name + ".";
  return autograd::add_row(autograd::matmul(x, param(p + "weight")), param(p + "bias"));
}

template <typename T>
Var<T> Encoder<T>::dropout(const Var<T>& x, Mode mode, Rng* rng) const {
  if (mode != Mode::kTrain || config_.dropout_rate <= 0.0 || rng == nullptr) return x;
  const double keep = 1.0 - config_.dropout_rate;
  Matrix<T> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->uniform01() < keep ? static_cast<T>(1.0 / keep) : T(0);
  }
  return autograd::apply_mask(x, std::move(mask));
}

template <typename T>
Var<T> Encoder<T>::attention(const Var<T>& x, int layer, const std::vector<bool>& key_valid,
                             Mode mode, Rng* rng) const {
  using namespace autograd;
  const std::string p = layer_prefix(layer) + "attention.";
  auto project = [&](const char* which) {
    return add_row(matmul(x, param(p + which + ".weight")), param(p + which + ".bias"));
  };
  const Var<T> q = project("query");
  const Var<T> k = project("key");
  const Var<T> v = project("value");

  const int heads = config_.num_heads;
  const Eigen::Index dh = config_.hidden_dim / heads;
  const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<Var<T>> contexts;
  contexts.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const Var<T> qh = slice_cols(q, h * dh, dh);
    const Var<T> kh = slice_cols(k, h * dh, dh);
    const Var<T> vh = slice_cols(v, h * dh, dh);
    Var<T> probs = masked_softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt_dh), key_valid);
    probs = dropout(probs, mode, rng);
    contexts.push_back(matmul(probs, vh));
  }
  const Var<T> ctx = heads == 1 ? contexts.front() : concat_cols(contexts);
  return add_row(matmul(ctx, param(p + "output.weight")), param(p + "output.bias"));
}

template <typename T>
EncoderOutput<T> Encoder<T>::forward(std::span<const TokenId> ids, Mode mode,
                                     Rng* dropout_rng) const {
  using namespace autograd;
  if (ids.empty()) throw DataError("encoder_forward: empty input");
  if (static_cast<int>(ids.size()) > config_.max_seq_len) {
    throw DataError("encoder_forward: sequence of length " + std::to_string(ids.size()) +
                    " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
  }
  std::vector<bool> key_valid(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= config_.vocab_size) {
      throw DataError("encoder_forward: token id " + std::to_string(ids[i]) +
                      " outside vocabulary of size " + std::to_string(config_.vocab_size));
    }
    key_valid[i] = ids[i] != tokenizer::kPadId;
  }
  const T eps = static_cast<T>(kLayerNormEps);
  const auto n = static_cast<Eigen::Index>(ids.size());

  Var<T> x = add(embedding(param("embeddings.token"), ids),
                 top_rows(param("embeddings.position"), n));
  x = dropout(layer_norm(x, param("embeddings.norm.gamma"), param("embeddings.norm.beta"), eps),
              mode, dropout_rng);

  EncoderOutput<T> out;
  out.layers.reserve(config_.num_layers);
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    const Var<T> a = dropout(attention(x, l, key_valid, mode, dropout_rng), mode, dropout_rng);
    const Var<T> x1 = layer_norm(add(x, a), param(p + "attention.norm.gamma"),
                                 param(p + "attention.norm.beta"), eps);
    const Var<T> inner =
        gelu(add_row(matmul(x1, param(p + "ffn.in.weight")), param(p + "ffn.in.bias")));
    const Var<T> f = dropout(
        add_row(matmul(inner, param(p + "ffn.out.weight")), param(p + "ffn.out.bias")), mode,
        dropout_rng);
    const Var<T> gamma = param(p + "ffn.norm.gamma");
    const Var<T> beta = param(p + "ffn.norm.beta");
    if (config_.adapter_dim) {
      const Var<T> h = layer_norm(add(x1, f), gamma, beta, eps);
      const Var<T> adapted =
          adapter_apply(h, f, param(p + "adapter.down"), param(p + "adapter.up"));
      x = layer_norm(add(x1, adapted), gamma, beta, eps);
    } else {
      x = layer_norm(add(x1, f), gamma, beta, eps);
    }
    out.layers.push_back(x);
  }
  return out;
}

template <typename T>
Var<T> Encoder<T>::mlm_logits(const Var<T>& hidden, std::span<const size_t> positions) const {
  using namespace autograd;
  const Var<T> t = layer_norm(
      gelu(add_row(matmul(select_rows(hidden, positions), param("mlm.transform.weight")),
                   param("mlm.transform.bias"))),
      param("mlm.transform.norm.gamma"), param("mlm.transform.norm.beta"),
      static_cast<T>(kLayerNormEps));
  // The output projection is the transposed token embedding table.
  return add_row(matmul_nt(t, param("embeddings.token")), param("mlm.decoder.bias"));
}

template Var<float> adapter_apply(const Var<float>&, const Var<float>&, const Var<float>&,
                                  const Var<float>&);
template Var<double> adapter_apply(const Var<double>&, const Var<double>&, const Var<double>&,
                                   const Var<double>&);
template class Encoder<float>;
template class Encoder<double>;

}  // namespace mdapt::encoder
