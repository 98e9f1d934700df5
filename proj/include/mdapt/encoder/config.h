#pragma once

#include <optional>

#include "json.hpp"

namespace mdapt::encoder {

struct EncoderConfig {
  int num_layers = 2;
  int hidden_dim = 32;
  int num_heads = 4;
  int ff_dim = 64;
  int max_seq_len = 32;
  int vocab_size = 0;
  std::optional<int> adapter_dim;  // unset: no adapters
  double dropout_rate = 0.0;

  // Throws UsageError when a dimension is non-positive, heads do not divide
  // hidden_dim, or dropout is outside [0, 1).
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

nlohmann::json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

}  // namespace mdapt::encoder
