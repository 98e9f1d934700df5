#include "mdapt/encoder/config.h"

#include <string>

#include "mdapt/common/error.h"

namespace mdapt::encoder {

void EncoderConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw UsageError(std::string("encoder config: ") + name + " must be positive");
  };
  positive(num_layers, "num_layers");
  positive(hidden_dim, "hidden_dim");
  positive(num_heads, "num_heads");
  positive(ff_dim, "ff_dim");
  positive(max_seq_len, "max_seq_len");
  positive(vocab_size, "vocab_size");
  if (adapter_dim) positive(*adapter_dim, "adapter_dim");
  if (hidden_dim % num_heads != 0) {
    throw UsageError("encoder config: num_heads must divide hidden_dim");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw UsageError("encoder config: dropout_rate must lie in [0, 1)");
  }
}

nlohmann::json to_json(const EncoderConfig& c) {
  nlohmann::json j = {{"num_layers", c.num_layers},     {"hidden_dim", c.hidden_dim},
                      {"num_heads", c.num_heads},       {"ff_dim", c.ff_dim},
                      {"max_seq_len", c.max_seq_len},   {"vocab_size", c.vocab_size},
                      {"dropout_rate", c.dropout_rate}, {"adapter_dim", nullptr}};
  if (c.adapter_dim) j["adapter_dim"] = *c.adapter_dim;
  return j;
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  try {
    c.num_layers = j.value("num_layers", c.num_layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.ff_dim = j.value("ff_dim", c.ff_dim);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    if (j.contains("adapter_dim") && !j["adapter_dim"].is_null()) {
      c.adapter_dim = j["adapter_dim"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed encoder config: ") + e.what());
  }
  return c;
}

}  // namespace mdapt::encoder
