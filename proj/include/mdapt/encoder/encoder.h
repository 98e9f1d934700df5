#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdapt/common/rng.h"
#include "mdapt/encoder/config.h"
#include "mdapt/encoder/parameters.h"
#include "mdapt/tokenizer/vocabulary.h"

namespace mdapt::encoder {

using tokenizer::TokenId;

enum class Mode { kTrain, kEval };

inline constexpr double kLayerNormEps = 1e-12;
inline constexpr double kInitStddev = 0.02;

template <typename T>
struct EncoderOutput {
  std::vector<Var<T>> layers;  // one (n x d) entry per transformer layer
  const Var<T>& final() const { return layers.back(); }
};

// U * ReLU(D * h) + r, with row-vector activations: h, r are (n x d),
// down is (d x b), up is (b x d). Throws std::invalid_argument on a shape
// mismatch.
template <typename T>
Var<T> adapter_apply(const Var<T>& h, const Var<T>& r, const Var<T>& down,
                     const Var<T>& up);

// Post-norm transformer encoder with a tied MLM decoder, optional bottleneck
// adapters after each feed-forward block, and named linear task heads.
//
// Layer wiring (x: layer input, f: feed-forward output):
//   x1  = LN_attn(x + Attention(x))
//   out = LN_ffn(x1 + f)                               without adapters
//   out = LN_ffn(x1 + Adapter(LN_ffn(x1 + f), f))      with adapters
// so zero-initialised up-projections leave the function unchanged.
template <typename T>
class Encoder {
 public:
  // Throws UsageError on an invalid config.
  Encoder(const EncoderConfig& config, uint64_t seed);

  Encoder(const Encoder& other);
  Encoder& operator=(const Encoder& other);
  Encoder(Encoder&&) noexcept = default;
  Encoder& operator=(Encoder&&) noexcept = default;

  const EncoderConfig& config() const { return config_; }
  ParameterStore<T>& params() { return store_; }
  const ParameterStore<T>& params() const { return store_; }

  bool has_adapters() const { return config_.adapter_dim.has_value(); }
  // Inserts adapters with a random down-projection and a zero up-projection.
  void add_adapters(int adapter_dim, uint64_t seed);

  void add_head(const std::string& name, int out_dim, uint64_t seed);
  bool has_head(const std::string& name) const;
  // x (n x d) -> (n x out_dim)
  Var<T> apply_head(const std::string& name, const Var<T>& x) const;

  void set_trainable(TrainableSet set) { store_.set_trainable(set); }

  // Hidden states of every layer. [PAD] positions are masked out as keys.
  // `dropout_rng` is only consulted in train mode with dropout_rate > 0.
  // Throws DataError for an out-of-range id or an over-long sequence.
  EncoderOutput<T> forward(std::span<const TokenId> ids, Mode mode,
                           Rng* dropout_rng = nullptr) const;

  // Vocabulary logits at the given rows of `hidden`: dense + GELU + layer
  // norm, then a projection tied to the token embeddings.
  Var<T> mlm_logits(const Var<T>& hidden, std::span<const size_t> positions) const;

  // Copy of this model in another scalar precision.
  template <typename U>
  Encoder<U> cast() const {
    Encoder<U> out(config_);
    for (const auto& p : store_.all()) {
      out.store_.add(p.name, p.group, p.var.value().template cast<U>(), p.weight_decay);
    }
    out.store_.set_trainable(store_.trainable_set());
    return out;
  }

 private:
  template <typename U>
  friend class Encoder;

  // Empty shell (no parameters); used by cast().
  explicit Encoder(const EncoderConfig& config) : config_(config) {}

  Var<T> param(const std::string& name) const { return store_.at(name).var; }
  Var<T> dropout(const Var<T>& x, Mode mode, Rng* rng) const;
  Var<T> attention(const Var<T>& x, int layer, const std::vector<bool>& key_valid,
                   Mode mode, Rng* rng) const;

  EncoderConfig config_;
  ParameterStore<T> store_;
};

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace mdapt::encoder
