#include "mdapt/training/pretrain.h"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mdapt/common/error.h"
#include "mdapt/encoder/checkpoint.h"
#include "mdapt/encoder/optimizer.h"
#include "mdapt/tokenizer/wordpiece.h"

namespace mdapt::training {

using encoder::Mode;
using encoder::ParamGroup;

std::vector<Sequence> encode_texts(const std::vector<std::string>& texts,
                                   const tokenizer::Vocabulary& vocab, size_t max_len) {
  std::vector<Sequence> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto enc = tokenizer::encode(t, vocab, max_len);
    if (enc.subtoken_ids.size() > 2) out.push_back(std::move(enc.subtoken_ids));
  }
  return out;
}

template <typename T>
double accumulate_mlm_gradients(Encoder<T>& model, std::span<const Sequence> examples,
                                std::span<const uint64_t> example_seeds, double scale,
                                const encoder::MaskingOptions& masking) {
  if (examples.size() != example_seeds.size()) {
    throw std::invalid_argument("accumulate_mlm_gradients: one seed per example required");
  }
  const auto vocab_size = static_cast<size_t>(model.config().vocab_size);
  double loss_sum = 0.0;
  autograd::Var<T> total;
  bool have_total = false;
  for (size_t i = 0; i < examples.size(); ++i) {
    Rng rng(example_seeds[i]);
    const auto masked = encoder::make_masking_plan(examples[i], vocab_size, masking, rng);
    if (masked.plan.empty()) continue;
    Rng dropout_rng = rng.fork("dropout");
    const auto out = model.forward(masked.corrupted, Mode::kTrain, &dropout_rng);
    const auto logits = model.mlm_logits(out.final(), masked.plan.positions);
    const auto loss = encoder::mlm_loss(logits, masked.plan).loss;
    loss_sum += static_cast<double>(loss.scalar());
    total = have_total ? autograd::add(total, loss) : loss;
    have_total = true;
  }
  if (have_total) autograd::backward(autograd::scale(total, static_cast<T>(scale)));
  return loss_sum;
}

template double accumulate_mlm_gradients(Encoder<float>&, std::span<const Sequence>,
                                         std::span<const uint64_t>, double,
                                         const encoder::MaskingOptions&);
template double accumulate_mlm_gradients(Encoder<double>&, std::span<const Sequence>,
                                         std::span<const uint64_t>, double,
                                         const encoder::MaskingOptions&);

namespace {

// Endless stream of example indices, reshuffled every epoch.
class EpochSampler {
 public:
  EpochSampler(size_t n, uint64_t seed) : n_(n), seed_(seed) { refill(); }

  size_t next() {
    if (cursor_ == order_.size()) refill();
    return order_[cursor_++];
  }

 private:
  void refill() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), size_t{0});
    Rng(Rng::derive_seed(seed_, epoch_++)).shuffle(order_.begin(), order_.end());
    cursor_ = 0;
  }
  size_t n_;
  uint64_t seed_;
  uint64_t epoch_ = 0;
  size_t cursor_ = 0;
  std::vector<size_t> order_;
};

}  // namespace

RunRecord pretrain_mlm(Encoder<float>& model, const std::vector<Sequence>& sequences,
                       const TrainConfig& cfg, const PretrainOptions& options) {
  cfg.validate();
  if (sequences.empty()) throw DataError("pretrain: no training sequences");
  if (cfg.mode == TrainMode::kAdapter && !model.has_adapters()) {
    throw UsageError("pretrain: adapter mode needs a model with adapters");
  }
  for (const auto& s : sequences) {
    if (static_cast<int>(s.size()) > model.config().max_seq_len) {
      throw DataError("pretrain: sequence longer than the model's max_seq_len");
    }
  }
  const auto started = std::chrono::steady_clock::now();
  model.set_trainable(cfg.mode == TrainMode::kFull ? encoder::TrainableSet::kAll
                                                   : encoder::TrainableSet::kAdaptersAndHeads);
  encoder::AdamW<float> optimizer(cfg.adamw());
  EpochSampler sampler(sequences.size(), Rng::derive_seed(cfg.seed, "order"));
  const uint64_t mask_seed = Rng::derive_seed(cfg.seed, "mask");
  const auto save = [&](int steps_done) {
    if (options.checkpoint_path.empty()) return;
    nlohmann::json meta = options.meta;
    meta["steps"] = steps_done;
    meta["seed"] = cfg.seed;
    encoder::save_checkpoint(model, options.checkpoint_path, options.save_groups, meta);
  };

  RunRecord record;
  record.seed = cfg.seed;
  record.checkpoint_path = options.checkpoint_path.string();
  const auto batch = static_cast<size_t>(cfg.effective_batch);
  const auto micro = static_cast<size_t>(cfg.micro_batch);
  std::vector<Sequence> examples(batch);
  std::vector<uint64_t> seeds(batch);
  for (int step = 0; step < cfg.max_steps; ++step) {
    for (size_t j = 0; j < batch; ++j) {
      examples[j] = sequences[sampler.next()];
      seeds[j] = Rng::derive_seed(mask_seed, static_cast<uint64_t>(step) * batch + j);
    }
    model.params().zero_grad();
    double loss_sum = 0.0;
    for (size_t start = 0; start < batch; start += micro) {
      loss_sum += accumulate_mlm_gradients<float>(
          model, std::span<const Sequence>(examples).subspan(start, micro),
          std::span<const uint64_t>(seeds).subspan(start, micro), 1.0 / static_cast<double>(batch),
          cfg.masking);
    }
    const double loss = loss_sum / static_cast<double>(batch);
    if (!std::isfinite(loss)) {
      throw NumericError("pretrain: non-finite loss at step " + std::to_string(step));
    }
    optimizer.step(model.params(), cfg.lr_scale(step));
    record.loss_trace.push_back(loss);
    if (options.checkpoint_every > 0 && (step + 1) % options.checkpoint_every == 0) save(step + 1);
    if (options.on_step) options.on_step(step, loss);
  }
  if (options.checkpoint_every <= 0 || cfg.max_steps % options.checkpoint_every != 0) {
    save(cfg.max_steps);
  }
  model.params().zero_grad();
  record.best_dev_metric = record.loss_trace.empty() ? 0.0 : record.loss_trace.back();
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

double evaluate_mlm_loss(const Encoder<float>& model, const std::vector<Sequence>& sequences,
                         const encoder::MaskingOptions& masking, uint64_t seed) {
  if (sequences.empty()) throw DataError("evaluate_mlm_loss: no sequences");
  const auto vocab_size = static_cast<size_t>(model.config().vocab_size);
  double sum = 0.0;
  size_t counted = 0;
  for (size_t i = 0; i < sequences.size(); ++i) {
    Rng rng(Rng::derive_seed(seed, static_cast<uint64_t>(i)));
    const auto masked = encoder::make_masking_plan(sequences[i], vocab_size, masking, rng);
    if (masked.plan.empty()) continue;
    const auto out = model.forward(masked.corrupted, Mode::kEval);
    const auto logits = model.mlm_logits(out.final(), masked.plan.positions);
    sum += static_cast<double>(encoder::mlm_loss(logits, masked.plan).loss.scalar());
    ++counted;
  }
  if (counted == 0) throw DataError("evaluate_mlm_loss: no maskable tokens");
  return sum / static_cast<double>(counted);
}

}  // namespace mdapt::training
