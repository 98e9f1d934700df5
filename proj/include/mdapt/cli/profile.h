#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/cli/fixtures.h"
#include "mdapt/composer/composer.h"
#include "mdapt/encoder/config.h"
#include "mdapt/training/classify.h"
#include "mdapt/training/train_config.h"

namespace mdapt::cli {

// Every tunable of a pipeline run, bound in one place.
struct RunProfile {
  std::string name;
  encoder::EncoderConfig encoder;  // vocab_size is filled in from the vocabulary
  size_t vocab_size = 0;
  composer::CompositionSpec composition;
  training::TrainConfig base_pretrain;  // from scratch on general text (desk only)
  training::TrainConfig dapt;           // continued pretraining, full model
  training::TrainConfig dapt_adapter;   // continued pretraining, adapters only
  training::TrainConfig ner;
  training::TrainConfig ner_adapter;
  training::TrainConfig classify;
  std::vector<training::GridCell> grid;
  std::vector<uint64_t> seeds;
  SyntheticSpec fixtures;
};

// The published hyper-parameters. Not runnable on a desk machine.
RunProfile paper_profile();
// Small encoder and fixture sizes that finish on one CPU core in minutes.
RunProfile desk_profile();

// Throws UsageError for an unknown name.
RunProfile profile_by_name(const std::string& name);

// Overrides from a JSON config file with "format_version": 1 and optional
// sections: encoder, composition, base_pretrain, dapt, dapt_adapter, ner,
// ner_adapter, classify, grid, seeds, fixtures. Throws UsageError for a
// missing or unsupported format_version or unknown section.
RunProfile apply_config(RunProfile profile, const nlohmann::json& config);
RunProfile apply_config_file(RunProfile profile, const std::filesystem::path& path);

// Replaces the seed of every stage with one derived from `seed`.
RunProfile with_seed(RunProfile profile, uint64_t seed);

nlohmann::json to_json(const RunProfile& p);

}  // namespace mdapt::cli
