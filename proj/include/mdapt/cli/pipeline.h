#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdapt/cli/profile.h"
#include "mdapt/composer/composer.h"
#include "mdapt/evaluation/retrieval.h"
#include "mdapt/encoder/encoder.h"
#include "mdapt/ingest/ingest.h"
#include "mdapt/tokenizer/vocabulary.h"
#include "mdapt/training/pretrain.h"

namespace mdapt::cli {

// Directories are read as pool directories (<lang>.jsonl files), descending
// into subdirectories in name order; files are read as JSON-lines corpora
// carrying their own lang field.
std::vector<ingest::SentenceRecord> read_corpus_paths(
    const std::vector<std::filesystem::path>& paths);

std::vector<std::string> texts_of(const std::vector<ingest::SentenceRecord>& records);

// Pools of one domain of a fixture directory.
composer::Pools fixture_pools(const FixtureLayout& layout, const std::string& domain);

encoder::EncoderConfig model_config(const RunProfile& profile,
                                    const tokenizer::Vocabulary& vocab);

// Mean-pooled final-layer states, one vector per sentence.
std::vector<evaluation::SentenceVector> sentence_vectors(
    const encoder::Encoder<float>& model, const tokenizer::Vocabulary& vocab,
    const std::vector<RetrievalSentence>& sentences);

// JSON lines {"id": ..., "vector": [...]}.
std::vector<evaluation::SentenceVector> read_vectors(const std::filesystem::path& path);
void write_vectors(const std::filesystem::path& path,
                   const std::vector<evaluation::SentenceVector>& vectors);

// P@1 of the fixture's parallel sentences under `model`.
double fixture_retrieval_p1(const encoder::Encoder<float>& model,
                            const tokenizer::Vocabulary& vocab, const FixtureLayout& layout);

// Continued pretraining of a copy of `base` on the composed corpus. Adapter
// mode inserts adapters first and trains only them.
encoder::Encoder<float> domain_adapt(const encoder::Encoder<float>& base,
                                     const tokenizer::Vocabulary& vocab,
                                     const composer::CorpusManifest& manifest,
                                     const composer::Pools& pools,
                                     const training::TrainConfig& cfg,
                                     const training::PretrainOptions& options = {});

// Runs `body`, prefixing any error with the stage name while keeping its
// exit code.
void run_stage(const std::string& stage, const std::function<void()>& body);

struct PipelineOptions {
  RunProfile profile;
  std::vector<composer::Strategy> strategies;  // empty: all three
  std::filesystem::path out;
  std::optional<std::filesystem::path> fixtures;         // generated when absent
  std::optional<std::filesystem::path> base_checkpoint;  // pretrained when absent
  std::optional<std::filesystem::path> vocab;            // built when absent
  bool adapters = false;  // adapter DAPT and fine-tuning instead of full
  std::function<void(const std::string&)> log;
};

struct PipelineResult {
  nlohmann::json metrics;  // deterministic for a fixed seed
  std::string summary;     // rows = tasks, columns = base and each strategy
};

// compose -> pretrain -> finetune -> eval -> report, writing manifests,
// checkpoints, metrics.json, timings.json and summary.txt below `out`.
PipelineResult run_pipeline(const PipelineOptions& options);

// Table with one row per task and the columns base, +E_D, +M_D+E_D,
// +M_D+M_WIKI; cells missing from `metrics` print as "-".
std::string summary_table(const nlohmann::json& metrics);

}  // namespace mdapt::cli
