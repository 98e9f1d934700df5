#include "mdapt/cli/profile.h"

#include <fstream>
#include <set>

#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"

namespace mdapt::cli {

RunProfile paper_profile() {
  RunProfile p;
  p.name = "paper";
  p.encoder = {12, 768, 12, 3072, 128, 0, std::nullopt, 0.1};
  p.vocab_size = 119547;
  p.composition = {};

  training::TrainConfig dapt;
  dapt.learning_rate = 5e-5;
  dapt.effective_batch = 2048;
  dapt.micro_batch = 32;
  dapt.max_steps = 25000;
  dapt.max_seq_len = 128;
  p.base_pretrain = dapt;
  p.dapt = dapt;
  p.dapt_adapter = dapt;
  p.dapt_adapter.mode = training::TrainMode::kAdapter;
  p.dapt_adapter.max_steps = 1500000;
  p.dapt_adapter.learning_rate = 1e-4;

  training::TrainConfig ner;
  ner.learning_rate = 2e-5;
  ner.effective_batch = 32;
  ner.micro_batch = 32;
  ner.max_epochs = 100;
  ner.early_stop_patience = 25;
  ner.max_seq_len = 128;
  p.ner = ner;
  p.ner_adapter = ner;
  p.ner_adapter.mode = training::TrainMode::kAdapter;
  p.ner_adapter.learning_rate = 1e-4;
  p.ner_adapter.max_epochs = 30;

  p.classify = ner;
  p.classify.max_epochs = 0;  // taken from the grid
  p.grid = training::default_grid();
  p.seeds = {1, 2, 3, 4, 5};
  return p;
}

RunProfile desk_profile() {
  RunProfile p;
  p.name = "desk";
  p.encoder = {2, 32, 4, 64, 32, 0, std::nullopt, 0.0};
  p.vocab_size = 2500;
  p.composition.budget = 2400;

  training::TrainConfig pre;
  pre.learning_rate = 2e-3;
  pre.effective_batch = 16;
  pre.micro_batch = 16;
  pre.max_steps = 6000;
  pre.warmup_steps = 30;
  pre.max_seq_len = 32;
  pre.adapter_dim = 16;
  p.base_pretrain = pre;
  p.dapt = pre;
  p.dapt.max_steps = 1500;
  p.dapt.learning_rate = 1e-3;
  p.dapt_adapter = p.dapt;
  p.dapt_adapter.mode = training::TrainMode::kAdapter;
  p.dapt_adapter.learning_rate = 3e-3;

  training::TrainConfig ner;
  ner.learning_rate = 3e-3;
  ner.effective_batch = 8;
  ner.micro_batch = 8;
  ner.max_epochs = 60;
  ner.early_stop_patience = 15;
  ner.max_seq_len = 32;
  p.ner = ner;
  p.ner_adapter = ner;
  p.ner_adapter.mode = training::TrainMode::kAdapter;
  p.ner_adapter.learning_rate = 3e-3;

  p.classify = ner;
  p.classify.learning_rate = 1e-3;
  p.grid = training::default_grid();
  p.seeds = {1, 2, 3};
  return p;
}

RunProfile profile_by_name(const std::string& name) {
  if (name == "paper") return paper_profile();
  if (name == "desk") return desk_profile();
  throw UsageError("unknown profile '" + name + "' (expected paper or desk)");
}

RunProfile apply_config(RunProfile p, const nlohmann::json& config) {
  if (!config.is_object()) throw UsageError("config must be a JSON object");
  if (!config.contains("format_version") || config.at("format_version") != 1) {
    throw UsageError("config: format_version 1 required");
  }
  static const std::set<std::string> known = {
      "format_version", "encoder", "vocab_size", "composition", "base_pretrain", "dapt",
      "dapt_adapter", "ner", "ner_adapter", "classify", "grid", "seeds", "fixtures"};
  for (const auto& [key, value] : config.items()) {
    if (!known.count(key)) throw UsageError("config: unknown section '" + key + "'");
  }
  try {
    if (config.contains("encoder")) {
      nlohmann::json merged = encoder::to_json(p.encoder);
      merged.merge_patch(config.at("encoder"));
      p.encoder = encoder::encoder_config_from_json(merged);
    }
    p.vocab_size = config.value("vocab_size", p.vocab_size);
    if (config.contains("composition")) {
      const auto& c = config.at("composition");
      if (c.contains("strategy")) {
        const auto s = composer::parse_strategy(c.at("strategy").get<std::string>());
        if (!s) throw UsageError("config: unknown strategy");
        p.composition.strategy = *s;
      }
      if (c.contains("basis")) {
        const auto b = composer::parse_basis(c.at("basis").get<std::string>());
        if (!b) throw UsageError("config: unknown smoothing basis");
        p.composition.basis = *b;
      }
      p.composition.budget = c.value("budget", p.composition.budget);
      p.composition.alpha = c.value("alpha", p.composition.alpha);
      p.composition.english = c.value("english", p.composition.english);
    }
    for (auto [key, cfg] : {std::pair{"base_pretrain", &p.base_pretrain}, {"dapt", &p.dapt},
                            {"dapt_adapter", &p.dapt_adapter}, {"ner", &p.ner},
                            {"ner_adapter", &p.ner_adapter}, {"classify", &p.classify}}) {
      if (config.contains(key)) *cfg = training::train_config_from_json(config.at(key), *cfg);
    }
    if (config.contains("grid")) {
      p.grid.clear();
      for (const auto& cell : config.at("grid")) {
        p.grid.push_back({cell.at("batch_size").get<int>(), cell.at("epochs").get<int>()});
      }
    }
    if (config.contains("seeds")) p.seeds = config.at("seeds").get<std::vector<uint64_t>>();
    if (config.contains("fixtures")) {
      p.fixtures = synthetic_spec_from_json(config.at("fixtures"), p.fixtures);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  return p;
}

RunProfile apply_config_file(RunProfile profile, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return apply_config(std::move(profile), config);
}

RunProfile with_seed(RunProfile p, uint64_t seed) {
  p.composition.seed = Rng::derive_seed(seed, "compose");
  p.base_pretrain.seed = Rng::derive_seed(seed, "base-pretrain");
  p.dapt.seed = Rng::derive_seed(seed, "dapt");
  p.dapt_adapter.seed = Rng::derive_seed(seed, "dapt-adapter");
  p.ner.seed = Rng::derive_seed(seed, "ner");
  p.ner_adapter.seed = Rng::derive_seed(seed, "ner-adapter");
  p.classify.seed = Rng::derive_seed(seed, "classify");
  p.fixtures.seed = Rng::derive_seed(seed, "fixtures");
  return p;
}

nlohmann::json to_json(const RunProfile& p) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& c : p.grid) grid.push_back({{"batch_size", c.batch_size}, {"epochs", c.epochs}});
  return {{"format_version", 1},
          {"name", p.name},
          {"encoder", encoder::to_json(p.encoder)},
          {"vocab_size", p.vocab_size},
          {"composition",
           {{"strategy", composer::strategy_name(p.composition.strategy)},
            {"basis", composer::basis_name(p.composition.basis)},
            {"budget", p.composition.budget},
            {"alpha", p.composition.alpha},
            {"english", p.composition.english}}},
          {"base_pretrain", training::to_json(p.base_pretrain)},
          {"dapt", training::to_json(p.dapt)},
          {"dapt_adapter", training::to_json(p.dapt_adapter)},
          {"ner", training::to_json(p.ner)},
          {"ner_adapter", training::to_json(p.ner_adapter)},
          {"classify", training::to_json(p.classify)},
          {"grid", grid},
          {"seeds", p.seeds},
          {"fixtures", to_json(p.fixtures)}};
}

}  // namespace mdapt::cli
