#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/encoder/encoder.h"

namespace mdapt::encoder {

// Binary container:
//   "MDAPTCKP"  u32 format_version  u32 header_len  header (JSON: config, meta)
//   u32 tensor_count, then per tensor:
//   u32 name_len  name  u32 group  u32 rank(=2)  u64 rows  u64 cols
//   rows*cols little-endian float32, row-major
// All integers little-endian.
inline constexpr uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  ParamGroup group = ParamGroup::kBase;
  Matrix<float> value;
};

struct Checkpoint {
  EncoderConfig config;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorRecord> tensors;
};

// Writes the tensors of the selected groups. An adapter-only file is
// save_checkpoint(model, path, {kAdapter, kHead}).
void save_checkpoint(const Encoder<float>& model, const std::filesystem::path& path,
                     const std::set<ParamGroup>& groups = {ParamGroup::kBase,
                                                           ParamGroup::kAdapter,
                                                           ParamGroup::kHead},
                     const nlohmann::json& meta = nlohmann::json::object());

// Throws DataError on a truncated or malformed file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Builds a model from a checkpoint that contains base weights, creating any
// adapters and heads it carries.
Encoder<float> model_from_checkpoint(const Checkpoint& ckpt);

// Copies tensors into an existing model, creating missing adapters/heads.
// Throws DataError on a shape mismatch or an unknown base tensor.
void apply_checkpoint(Encoder<float>& model, const Checkpoint& ckpt);

Encoder<float> load_model(const std::filesystem::path& path);

}  // namespace mdapt::encoder
