#include "mdapt/training/ner.h"

#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mdapt/common/error.h"
#include "mdapt/evaluation/bio.h"
#include "mdapt/tokenizer/wordpiece.h"
#include "mdapt/training/early_stopping.h"
#include "minibatch.h"

namespace mdapt::training {
namespace {

using encoder::Encoder;
using encoder::Mode;

size_t effective_max_len(const Encoder<float>& model, size_t requested) {
  return std::min(requested, static_cast<size_t>(model.config().max_seq_len));
}

std::vector<evaluation::SpanMention> spans_of(const std::vector<std::vector<std::string>>& tags) {
  std::vector<evaluation::SpanMention> out;
  for (size_t s = 0; s < tags.size(); ++s) {
    auto spans = evaluation::bio_decode(tags[s], s);
    out.insert(out.end(), spans.begin(), spans.end());
  }
  return out;
}

struct EncodedNer {
  tokenizer::TokenizedSentence enc;
  std::vector<int32_t> targets;  // one per kept word
};

EncodedNer encode_sentence(const NerSentence& s, const tokenizer::Vocabulary& vocab,
                           const std::map<std::string, int32_t>& label_ids, size_t max_len) {
  EncodedNer out;
  out.enc = tokenizer::encode_words(s.words, vocab, max_len);
  for (size_t w = 0; w < out.enc.words.size(); ++w) {
    auto it = label_ids.find(s.tags[w]);
    // Entity types unseen in training cannot be predicted; train them as O.
    out.targets.push_back(it == label_ids.end() ? 0 : it->second);
  }
  return out;
}

}  // namespace

std::vector<NerSentence> read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<NerSentence> out;
  NerSentence current;
  std::string line;
  size_t line_no = 0;
  auto flush = [&] {
    if (!current.words.empty()) out.push_back(std::move(current));
    current = {};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string word;
    std::string tag;
    std::string extra;
    if (!(fields >> word)) {
      flush();
      continue;
    }
    if (word == "-DOCSTART-") continue;
    if (!(fields >> tag) || (fields >> extra)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected two columns (word, tag)");
    }
    if (!evaluation::is_bio_tag(tag)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad BIO tag '" + tag +
                      "'");
    }
    current.words.push_back(std::move(word));
    current.tags.push_back(std::move(tag));
  }
  flush();
  return out;
}

void write_conll(const std::filesystem::path& path, const std::vector<NerSentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& s : sentences) {
    for (size_t i = 0; i < s.words.size(); ++i) out << s.words[i] << '\t' << s.tags[i] << '\n';
    out << '\n';
  }
}

std::vector<std::string> ner_label_set(const std::vector<NerSentence>& sentences) {
  std::set<std::string> types;
  for (const auto& s : sentences) {
    if (s.words.size() != s.tags.size()) throw DataError("NER sentence with mismatched tags");
    for (const auto& t : s.tags) {
      if (!evaluation::is_bio_tag(t)) throw DataError("bad BIO tag '" + t + "'");
      if (t != "O") types.insert(t.substr(2));
    }
  }
  std::vector<std::string> labels{"O"};
  for (const auto& x : types) {
    labels.push_back("B-" + x);
    labels.push_back("I-" + x);
  }
  return labels;
}

std::vector<std::vector<std::string>> predict_ner(const Encoder<float>& model,
                                                  const tokenizer::Vocabulary& vocab,
                                                  const std::vector<NerSentence>& sentences,
                                                  const std::vector<std::string>& labels,
                                                  size_t max_len) {
  max_len = effective_max_len(model, max_len);
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::string> tags(s.words.size(), "O");
    const auto enc = tokenizer::encode_words(s.words, vocab, max_len);
    if (!enc.words.empty()) {
      const auto hidden = model.forward(enc.subtoken_ids, Mode::kEval).final();
      const auto logits =
          model.apply_head(kNerHead, autograd::select_rows(hidden, enc.word_to_first_subtoken));
      for (size_t w = 0; w < enc.words.size(); ++w) {
        Eigen::Index best = 0;
        logits.value().row(static_cast<Eigen::Index>(w)).maxCoeff(&best);
        tags[w] = labels.at(static_cast<size_t>(best));
      }
    }
    out.push_back(std::move(tags));
  }
  return out;
}

evaluation::PrecisionRecallF1 evaluate_ner(const Encoder<float>& model,
                                           const tokenizer::Vocabulary& vocab,
                                           const std::vector<NerSentence>& sentences,
                                           const std::vector<std::string>& labels,
                                           size_t max_len) {
  std::vector<std::vector<std::string>> gold;
  gold.reserve(sentences.size());
  for (const auto& s : sentences) gold.push_back(s.tags);
  return evaluation::span_micro_f1(spans_of(gold),
                                   spans_of(predict_ner(model, vocab, sentences, labels, max_len)));
}

NerResult finetune_ner(Encoder<float>& model, const tokenizer::Vocabulary& vocab,
                       const NerDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw DataError("finetune_ner: empty training set");
  if (data.dev.empty()) throw DataError("finetune_ner: empty dev set");
  if (cfg.mode == TrainMode::kAdapter && !model.has_adapters()) {
    throw UsageError("finetune_ner: adapter mode needs a model with adapters");
  }
  const auto started = std::chrono::steady_clock::now();
  NerResult result;
  result.labels = ner_label_set(data.train);
  ner_label_set(data.dev);
  ner_label_set(data.test);
  std::map<std::string, int32_t> label_ids;
  for (size_t i = 0; i < result.labels.size(); ++i) {
    label_ids[result.labels[i]] = static_cast<int32_t>(i);
  }
  const auto num_labels = static_cast<int>(result.labels.size());
  if (model.has_head(kNerHead)) {
    if (model.params().at("head.ner.bias").var.cols() != num_labels) {
      throw UsageError("finetune_ner: existing head has the wrong number of labels");
    }
  } else {
    model.add_head(kNerHead, num_labels, Rng::derive_seed(cfg.seed, "ner-head"));
  }
  model.set_trainable(cfg.mode == TrainMode::kFull ? encoder::TrainableSet::kAll
                                                   : encoder::TrainableSet::kAdaptersAndHeads);
  const size_t max_len = effective_max_len(model, static_cast<size_t>(cfg.max_seq_len));

  std::vector<EncodedNer> train;
  train.reserve(data.train.size());
  for (const auto& s : data.train) train.push_back(encode_sentence(s, vocab, label_ids, max_len));
  std::vector<EncodedNer> dev;
  if (cfg.dev_metric == DevMetric::kLoss) {
    for (const auto& s : data.dev) dev.push_back(encode_sentence(s, vocab, label_ids, max_len));
  }

  encoder::AdamW<float> optimizer(cfg.adamw());
  int step = 0;
  const auto loss_of = [&](const EncodedNer& ex, Mode mode,
                           Rng* rng) -> std::optional<autograd::Var<float>> {
    if (ex.targets.empty()) return std::nullopt;
    const auto hidden = model.forward(ex.enc.subtoken_ids, mode, rng).final();
    const auto logits =
        model.apply_head(kNerHead, autograd::select_rows(hidden, ex.enc.word_to_first_subtoken));
    return autograd::cross_entropy(logits, std::span<const int32_t>(ex.targets));
  };
  const Rng root(cfg.seed);
  Rng dropout_rng = root.fork("dropout");
  const auto run_epoch = [&](int epoch) {
    const double train_loss = detail::train_epoch(
        model, optimizer, train.size(), static_cast<size_t>(cfg.effective_batch),
        static_cast<size_t>(cfg.micro_batch), root.fork("epoch-" + std::to_string(epoch)),
        [&](size_t i) { return loss_of(train[i], Mode::kTrain, &dropout_rng); },
        [&] { return cfg.lr_scale(step++); });
    result.record.loss_trace.push_back(train_loss);
    if (cfg.dev_metric == DevMetric::kSpanF1) {
      return evaluate_ner(model, vocab, data.dev, result.labels, max_len).f1;
    }
    double sum = 0.0;
    size_t n = 0;
    for (const auto& ex : dev) {
      if (auto l = loss_of(ex, Mode::kEval, nullptr)) {
        sum += static_cast<double>(l->scalar());
        ++n;
      }
    }
    return n == 0 ? 0.0 : -sum / static_cast<double>(n);
  };
  std::optional<Encoder<float>> best;
  const auto stop = run_early_stopping(cfg.max_epochs, cfg.early_stop_patience, run_epoch,
                                       [&](int) { best = model; });
  if (best) {
    const auto trainable = model.params().trainable_set();
    model = std::move(*best);
    model.set_trainable(trainable);
  }
  result.best_dev_metric = stop.best_metric;
  result.epochs_run = stop.epochs_run;
  result.best_epoch = stop.best_epoch;
  if (!data.test.empty()) result.test = evaluate_ner(model, vocab, data.test, result.labels, max_len);
  result.record.seed = cfg.seed;
  result.record.best_dev_metric = stop.best_metric;
  result.record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace mdapt::training
