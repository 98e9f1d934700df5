#include "mdapt/cli/commands.h"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "mdapt/cli/fixtures.h"
#include "mdapt/cli/pipeline.h"
#include "mdapt/cli/profile.h"
#include "mdapt/common/error.h"
#include "mdapt/common/rng.h"
#include "mdapt/composer/composer.h"
#include "mdapt/encoder/checkpoint.h"
#include "mdapt/evaluation/bio.h"
#include "mdapt/evaluation/cross_domain.h"
#include "mdapt/evaluation/metrics.h"
#include "mdapt/evaluation/retrieval.h"
#include "mdapt/ingest/ingest.h"
#include "mdapt/tokenizer/continued_words.h"
#include "mdapt/tokenizer/wordpiece.h"
#include "mdapt/training/classify.h"
#include "mdapt/training/ner.h"
#include "mdapt/training/pretrain.h"

namespace mdapt::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::string profile = "desk";
  std::string out;
};

RunProfile resolve_profile(const Globals& g) {
  RunProfile p = profile_by_name(g.profile);
  if (!g.config.empty()) p = apply_config_file(std::move(p), g.config);
  if (g.seed) p = with_seed(std::move(p), *g.seed);
  return p;
}

fs::path require_out(const Globals& g, const std::string& what) {
  if (g.out.empty()) throw UsageError("--out " + what + " is required");
  return g.out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> labels_of(const encoder::Checkpoint& ckpt) {
  if (!ckpt.meta.contains("labels")) {
    throw DataError("checkpoint has no label set; was it written by finetune-ner/finetune-clf?");
  }
  return ckpt.meta.at("labels").get<std::vector<std::string>>();
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

// name=path pairs; repeated names accumulate.
std::map<std::string, std::vector<std::string>> parse_pairs(const std::vector<std::string>& items,
                                                            const std::string& flag) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw UsageError(flag + " expects name=path, got '" + item + "'");
    }
    out[item.substr(0, eq)].push_back(item.substr(eq + 1));
  }
  return out;
}

composer::Pools pools_from_files(const std::map<std::string, std::vector<std::string>>& files) {
  composer::Pools pools;
  for (const auto& [name, paths] : files) {
    const auto kind = composer::parse_pool(name);
    if (!kind) {
      throw UsageError("unknown pool '" + name +
                       "' (expected domain-multilingual, domain-english or general-multilingual)");
    }
    auto records = read_corpus_paths(to_paths(paths));
    auto& dst = pools.get(*kind);
    dst.insert(dst.end(), records.begin(), records.end());
  }
  return pools;
}

double ner_f1(const std::vector<training::NerSentence>& gold,
              const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                    std::to_string(pred.size()));
  }
  std::vector<evaluation::SpanMention> g, p;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tags.size() != pred[i].size()) {
      throw DataError("sentence " + std::to_string(i + 1) + ": gold has " +
                      std::to_string(gold[i].tags.size()) + " tokens, prediction has " +
                      std::to_string(pred[i].size()));
    }
    auto gs = evaluation::bio_decode(gold[i].tags, i);
    auto ps = evaluation::bio_decode(pred[i], i);
    g.insert(g.end(), gs.begin(), gs.end());
    p.insert(p.end(), ps.begin(), ps.end());
  }
  return evaluation::span_micro_f1(g, p).f1;
}

double evaluate_checkpoint(const std::string& task, const fs::path& checkpoint,
                           const tokenizer::Vocabulary& vocab, const fs::path& data) {
  const auto ckpt = encoder::read_checkpoint(checkpoint);
  const auto labels = labels_of(ckpt);
  const auto model = encoder::model_from_checkpoint(ckpt);
  const auto max_len = static_cast<size_t>(model.config().max_seq_len);
  if (task == "ner") {
    return training::evaluate_ner(model, vocab, training::read_conll(data), labels, max_len).f1;
  }
  return training::evaluate_classifier(model, vocab, training::read_labeled_jsonl(data), labels,
                                       max_len);
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual domain-adaptive pretraining toolkit", "mdapt"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config overriding the profile")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed from which every stage seed is derived");
  app.add_option("--profile", g.profile, "Hyper-parameter profile")
      ->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--out", g.out, "Output path (file or directory, per command)");

  std::function<void()> action;

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "Generate synthetic corpora and task data");
  fixtures->callback([&] {
    action = [&] {
      const auto profile = resolve_profile(g);
      const auto layout = generate_fixtures(profile.fixtures, require_out(g, "DIR"));
      out << "fixtures " << layout.root.string() << '\n'
          << "sha256 " << directory_hash(layout.root) << '\n';
    };
  });

  // compose
  std::string strategy;
  std::vector<std::string> pool_args;
  std::optional<uint64_t> budget;
  std::optional<double> alpha;
  std::string basis;
  auto* compose = app.add_subcommand("compose", "Compose a pretraining corpus manifest");
  compose->add_option("--strategy", strategy, "ed | md-ed | md-mwiki")->required();
  compose->add_option("--pool", pool_args, "name=path (file or pool directory), repeatable")
      ->required();
  compose->add_option("--budget", budget, "Sentence budget");
  compose->add_option("--alpha", alpha, "Smoothing exponent");
  compose->add_option("--basis", basis, "domain | general: counts the smoothing uses");
  compose->callback([&] {
    action = [&] {
      auto profile = resolve_profile(g);
      auto spec = profile.composition;
      const auto s = composer::parse_strategy(strategy);
      if (!s) throw UsageError("unknown strategy '" + strategy + "'");
      spec.strategy = *s;
      if (budget) spec.budget = *budget;
      if (alpha) spec.alpha = *alpha;
      if (!basis.empty()) {
        const auto b = composer::parse_basis(basis);
        if (!b) throw UsageError("unknown smoothing basis '" + basis + "'");
        spec.basis = *b;
      }
      const auto path = require_out(g, "FILE");
      const auto files = parse_pairs(pool_args, "--pool");
      auto manifest = composer::compose(spec, pools_from_files(files));
      manifest.pool_files = files;
      write_json_file(path, composer::manifest_to_json(manifest));
      out << composer::manifest_report(manifest);
      out << "hash " << manifest.content_hash << '\n';
      if (manifest.shortfall) {
        err << "warning: pools hold " << manifest.missing << " sentences fewer than the budget\n";
      }
    };
  });

  // vocab
  std::vector<std::string> inputs;
  std::optional<size_t> vocab_size;
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a subword vocabulary");
  vocab_cmd->add_option("--input", inputs, "Corpus files or pool directories")->required();
  vocab_cmd->add_option("--size", vocab_size, "Vocabulary size");
  vocab_cmd->callback([&] {
    action = [&] {
      const auto profile = resolve_profile(g);
      const auto path = require_out(g, "FILE");
      const auto v = tokenizer::build_vocab(texts_of(read_corpus_paths(to_paths(inputs))),
                                            vocab_size.value_or(profile.vocab_size));
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      v.save(path);
      out << "vocab " << v.size() << " tokens -> " << path.string() << '\n';
    };
  });

  // tokstats
  std::string vocab_path, vocab_b_path;
  std::vector<std::string> general_inputs, specific_inputs;
  bool exclude_punct = false;
  auto* tokstats = app.add_subcommand("tokstats", "Corpus statistics and continued-word rates");
  tokstats->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  tokstats->add_option("--input", inputs, "Corpus files or pool directories");
  tokstats->add_option("--compare", vocab_b_path, "Second vocabulary for a gap report");
  tokstats->add_option("--general", general_inputs, "General-text corpus for the gap report");
  tokstats->add_option("--specific", specific_inputs, "Domain corpus for the gap report");
  tokstats->add_flag("--exclude-punctuation", exclude_punct);
  tokstats->callback([&] {
    action = [&] {
      const auto va = tokenizer::Vocabulary::load(vocab_path);
      const tokenizer::ContinuedWordOptions opts{exclude_punct};
      json report = json::object();
      if (!inputs.empty()) {
        const auto records = read_corpus_paths(to_paths(inputs));
        std::set<std::string> langs;
        for (const auto& r : records) langs.insert(r.lang);
        const auto stats = ingest::corpus_stats(records, va, langs);
        json per = json::object();
        for (const auto& [lang, s] : stats.per_language) {
          std::vector<std::string> texts;
          for (const auto& r : records) {
            if (r.lang == lang) texts.push_back(r.text);
          }
          per[lang] = {{"sentences", s.sentences},
                       {"tokens", s.tokens},
                       {"continued_word_fraction",
                        tokenizer::continued_word_fraction(texts, va, opts)}};
        }
        report["languages"] = per;
        report["total"] = {{"sentences", stats.total.sentences}, {"tokens", stats.total.tokens}};
      }
      if (!vocab_b_path.empty()) {
        if (general_inputs.empty() || specific_inputs.empty()) {
          throw UsageError("--compare needs --general and --specific");
        }
        const auto vb = tokenizer::Vocabulary::load(vocab_b_path);
        const auto gap = tokenizer::tokenizer_gap_report(
            va, vb, texts_of(read_corpus_paths(to_paths(general_inputs))),
            texts_of(read_corpus_paths(to_paths(specific_inputs))), opts);
        report["gap"] = {{"a_general", gap.a_general},           {"b_general", gap.b_general},
                         {"a_specific", gap.a_specific},         {"b_specific", gap.b_specific},
                         {"delta_general", gap.delta_general},   {"delta_specific", gap.delta_specific}};
      }
      if (report.empty()) throw UsageError("tokstats needs --input or --compare");
      if (!g.out.empty()) write_json_file(g.out, report);
      print_json(out, report);
    };
  });

  // pretrain
  std::string manifest_path, init_path, stage = "dapt";
  auto* pretrain = app.add_subcommand("pretrain", "Masked-LM pretraining");
  pretrain->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  pretrain->add_option("--manifest", manifest_path, "Corpus manifest from compose");
  pretrain->add_option("--input", inputs, "Corpus files or pool directories");
  pretrain->add_option("--init", init_path, "Checkpoint to continue from");
  pretrain->add_option("--stage", stage, "base | dapt | dapt-adapter")
      ->check(CLI::IsMember({"base", "dapt", "dapt-adapter"}));
  pretrain->callback([&] {
    action = [&] {
      const auto profile = resolve_profile(g);
      const auto path = require_out(g, "FILE");
      const auto vocab = tokenizer::Vocabulary::load(vocab_path);
      if (manifest_path.empty() == inputs.empty()) {
        throw UsageError("pass exactly one of --manifest and --input");
      }
      const auto& cfg = stage == "base"   ? profile.base_pretrain
                        : stage == "dapt" ? profile.dapt
                                          : profile.dapt_adapter;
      auto model = init_path.empty()
                       ? encoder::Encoder<float>(model_config(profile, vocab), cfg.seed)
                       : encoder::load_model(init_path);
      if (model.config().vocab_size != static_cast<int>(vocab.size())) {
        throw DataError("model vocabulary size " + std::to_string(model.config().vocab_size) +
                        " does not match " + vocab_path);
      }
      if (cfg.mode == training::TrainMode::kAdapter && !model.has_adapters()) {
        model.add_adapters(cfg.adapter_dim, Rng::derive_seed(cfg.seed, "adapter"));
      }
      std::vector<std::string> texts;
      json meta = {{"stage", stage}};
      if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        if (!in) throw DataError("cannot open " + manifest_path);
        json mj;
        try {
          mj = json::parse(in);
        } catch (const json::exception& e) {
          throw DataError(manifest_path + ": " + e.what());
        }
        const auto manifest = composer::manifest_from_json(mj);
        texts = texts_of(
            composer::resolve_manifest(manifest, pools_from_files(manifest.pool_files)));
        meta["manifest"] = manifest.content_hash;
      } else {
        texts = texts_of(read_corpus_paths(to_paths(inputs)));
      }
      const auto seqs = training::encode_texts(texts, vocab,
                                               static_cast<size_t>(model.config().max_seq_len));
      training::PretrainOptions po;
      po.checkpoint_path = path;
      po.meta = meta;
      const auto record = training::pretrain_mlm(model, seqs, cfg, po);
      out << "steps " << record.loss_trace.size() << " final_loss " << std::setprecision(6)
          << (record.loss_trace.empty() ? 0.0 : record.loss_trace.back()) << '\n';
    };
  });

  // finetune-ner
  std::string checkpoint_path, train_path, dev_path, test_path, data_path;
  bool adapter = false;
  auto* ft_ner = app.add_subcommand("finetune-ner", "Fine-tune a token classifier");
  ft_ner->add_option("--checkpoint", checkpoint_path, "Pretrained checkpoint")->required();
  ft_ner->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  ft_ner->add_option("--train", train_path, "CoNLL training file")->required();
  ft_ner->add_option("--dev", dev_path, "CoNLL dev file")->required();
  ft_ner->add_option("--test", test_path, "CoNLL test file")->required();
  ft_ner->add_flag("--adapter", adapter, "Train adapters and head only");
  ft_ner->callback([&] {
    action = [&] {
      const auto profile = resolve_profile(g);
      const auto path = require_out(g, "FILE");
      const auto vocab = tokenizer::Vocabulary::load(vocab_path);
      auto model = encoder::load_model(checkpoint_path);
      training::NerDataset data{training::read_conll(train_path), training::read_conll(dev_path),
                                training::read_conll(test_path)};
      const auto r = training::finetune_ner(model, vocab, data,
                                            adapter ? profile.ner_adapter : profile.ner);
      encoder::save_checkpoint(model, path,
                               {encoder::ParamGroup::kBase, encoder::ParamGroup::kAdapter,
                                encoder::ParamGroup::kHead},
                               {{"task", "ner"}, {"labels", r.labels}});
      print_json(out, {{"test_f1", r.test.f1},
                       {"test_precision", r.test.precision},
                       {"test_recall", r.test.recall},
                       {"best_dev_metric", r.best_dev_metric},
                       {"epochs_run", r.epochs_run},
                       {"best_epoch", r.best_epoch}});
    };
  });

  // finetune-clf
  auto* ft_clf = app.add_subcommand("finetune-clf", "Fine-tune a sentence classifier");
  ft_clf->add_option("--checkpoint", checkpoint_path, "Pretrained checkpoint")->required();
  ft_clf->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  ft_clf->add_option("--data", data_path, "Labeled JSON-lines file, split 80/20 then 20% dev")
      ->required();
  ft_clf->callback([&] {
    action = [&] {
      const auto profile = resolve_profile(g);
      const auto path = require_out(g, "FILE");
      const auto vocab = tokenizer::Vocabulary::load(vocab_path);
      auto model = encoder::load_model(checkpoint_path);
      const auto splits = training::make_classification_splits(
          training::read_labeled_jsonl(data_path), profile.classify.seed);
      const auto r =
          training::finetune_classify(model, vocab, splits, profile.classify, profile.grid);
      encoder::save_checkpoint(model, path,
                               {encoder::ParamGroup::kBase, encoder::ParamGroup::kAdapter,
                                encoder::ParamGroup::kHead},
                               {{"task", "clf"}, {"labels", r.labels}});
      json grid = json::array();
      for (const auto& c : r.grid) {
        grid.push_back({{"batch_size", c.cell.batch_size},
                        {"epochs", c.cell.epochs},
                        {"dev_micro_f1", c.dev_metric}});
      }
      print_json(out, {{"test_micro_f1", r.test_metric}, {"selected", r.selected}, {"grid", grid}});
    };
  });

  // eval
  std::string task, gold_path, pred_path;
  auto* eval = app.add_subcommand("eval", "Score predictions or a fine-tuned checkpoint");
  eval->add_option("--task", task, "ner | clf")->required()->check(CLI::IsMember({"ner", "clf"}));
  eval->add_option("--gold", gold_path, "Gold file (CoNLL or labeled JSON lines)");
  eval->add_option("--pred", pred_path, "Predictions in the gold file's format");
  eval->add_option("--checkpoint", checkpoint_path, "Fine-tuned checkpoint");
  eval->add_option("--vocab", vocab_path, "Vocabulary file");
  eval->add_option("--data", data_path, "Evaluation data for --checkpoint");
  eval->callback([&] {
    action = [&] {
      json report = {{"task", task}};
      if (!gold_path.empty() || !pred_path.empty()) {
        if (gold_path.empty() || pred_path.empty()) throw UsageError("--gold and --pred go together");
        if (task == "ner") {
          const auto gold = training::read_conll(gold_path);
          std::vector<std::vector<std::string>> pred;
          for (auto& s : training::read_conll(pred_path)) pred.push_back(std::move(s.tags));
          report["span_micro_f1"] = ner_f1(gold, pred);
        } else {
          std::vector<std::string> gold, pred;
          for (const auto& s : training::read_labeled_jsonl(gold_path)) gold.push_back(s.label);
          for (const auto& s : training::read_labeled_jsonl(pred_path)) pred.push_back(s.label);
          report["micro_f1"] = evaluation::sentence_micro_f1(gold, pred);
        }
      } else {
        if (checkpoint_path.empty() || vocab_path.empty() || data_path.empty()) {
          throw UsageError("pass --gold/--pred or --checkpoint/--vocab/--data");
        }
        const auto vocab = tokenizer::Vocabulary::load(vocab_path);
        report[task == "ner" ? "span_micro_f1" : "micro_f1"] =
            evaluate_checkpoint(task, checkpoint_path, vocab, data_path);
      }
      if (!g.out.empty()) write_json_file(g.out, report);
      print_json(out, report);
    };
  });

  // retrieve
  std::string source_path, target_path, alignment_path;
  bool vectors_input = false, exclude_specials = false;
  size_t k = 1;
  auto* retrieve = app.add_subcommand("retrieve", "Cross-lingual sentence retrieval precision@k");
  retrieve->add_option("--source", source_path, "Source sentences ({id, text} JSON lines)")
      ->required();
  retrieve->add_option("--target", target_path, "Target sentences")->required();
  retrieve->add_option("--alignment", alignment_path, "src_id<TAB>tgt_id gold pairs")->required();
  retrieve->add_option("--checkpoint", checkpoint_path, "Encoder checkpoint");
  retrieve->add_option("--vocab", vocab_path, "Vocabulary file");
  retrieve->add_flag("--vectors", vectors_input,
                     "Inputs are precomputed {id, vector} JSON lines instead of text");
  retrieve->add_flag("--exclude-specials", exclude_specials, "Pool without [CLS]/[SEP]");
  retrieve->add_option("-k", k, "Neighbours considered")->check(CLI::PositiveNumber);
  retrieve->callback([&] {
    action = [&] {
      std::vector<evaluation::SentenceVector> src, tgt;
      if (vectors_input) {
        src = read_vectors(source_path);
        tgt = read_vectors(target_path);
      } else {
        if (checkpoint_path.empty() || vocab_path.empty()) {
          throw UsageError("text input needs --checkpoint and --vocab (or pass --vectors)");
        }
        const auto vocab = tokenizer::Vocabulary::load(vocab_path);
        const auto model = encoder::load_model(checkpoint_path);
        const evaluation::PoolingOptions pooling{!exclude_specials};
        const auto max_len = static_cast<size_t>(model.config().max_seq_len);
        auto embed = [&](const fs::path& p) {
          std::vector<evaluation::SentenceVector> v;
          for (const auto& s : read_retrieval_sentences(p)) {
            const auto enc = tokenizer::encode(s.text, vocab, max_len);
            const Eigen::MatrixXd h =
                model.forward(enc.subtoken_ids, encoder::Mode::kEval).final().value().cast<double>();
            v.push_back({s.id, evaluation::mean_pool(h, enc.subtoken_ids, pooling)});
          }
          return v;
        };
        src = embed(source_path);
        tgt = embed(target_path);
      }
      const auto gold = evaluation::read_alignment(alignment_path);
      const json report = {{"k", k},
                           {"pairs", gold.size()},
                           {"precision_at_k", evaluation::retrieve_precision_at_k(src, tgt, gold, k)}};
      if (!g.out.empty()) write_json_file(g.out, report);
      print_json(out, report);
    };
  });

  // cross-domain
  std::vector<std::string> entries;
  auto* cross = app.add_subcommand("cross-domain", "Compare checkpoints on one task");
  cross->add_option("--task", task, "ner | clf")->required()->check(CLI::IsMember({"ner", "clf"}));
  cross->add_option("--model", entries, "name=checkpoint, repeatable")->required();
  cross->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  cross->add_option("--data", data_path, "Evaluation data")->required();
  cross->callback([&] {
    action = [&] {
      const auto vocab = tokenizer::Vocabulary::load(vocab_path);
      std::vector<evaluation::CrossDomainEntry> list;
      for (const auto& item : entries) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw UsageError("--model expects name=checkpoint, got '" + item + "'");
        }
        list.push_back({item.substr(0, eq), item.substr(eq + 1)});
      }
      const auto report = evaluation::cross_domain_report(
          task, list, [&](const fs::path& p) { return evaluate_checkpoint(task, p, vocab, data_path); });
      if (!g.out.empty()) write_json_file(g.out, report.to_json());
      out << report.table();
      if (!report.ok()) throw DataError("cross-domain report has failed rows");
    };
  });

  // pipeline
  std::vector<std::string> strategies;
  std::string fixtures_dir, base_ckpt, pipeline_vocab;
  bool pipeline_adapters = false;
  auto* pipeline = app.add_subcommand("pipeline", "Compose, pretrain, fine-tune and report");
  pipeline->add_option("--strategy", strategies, "ed, md-ed, md-mwiki or all (repeatable)");
  pipeline->add_option("--fixtures", fixtures_dir, "Existing fixture directory");
  pipeline->add_option("--base-checkpoint", base_ckpt, "Skip base pretraining");
  pipeline->add_option("--vocab", pipeline_vocab, "Existing vocabulary");
  pipeline->add_flag("--adapters", pipeline_adapters, "Adapter pretraining and fine-tuning");
  pipeline->callback([&] {
    action = [&] {
      PipelineOptions opts;
      opts.profile = resolve_profile(g);
      for (const auto& s : strategies) {
        if (s == "all") continue;
        const auto parsed = composer::parse_strategy(s);
        if (!parsed) throw UsageError("unknown strategy '" + s + "'");
        opts.strategies.push_back(*parsed);
      }
      opts.out = require_out(g, "DIR");
      if (!fixtures_dir.empty()) opts.fixtures = fixtures_dir;
      if (!base_ckpt.empty()) opts.base_checkpoint = base_ckpt;
      if (!pipeline_vocab.empty()) opts.vocab = pipeline_vocab;
      opts.adapters = pipeline_adapters;
      opts.log = [&](const std::string& m) { err << m << '\n'; };
      const auto result = run_pipeline(opts);
      out << result.summary;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsageError);
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kDataError);
  }
}

}  // namespace mdapt::cli
