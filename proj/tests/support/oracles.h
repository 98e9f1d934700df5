#pragma once

// Slow, obviously-correct reference computations. None of these call into the
// code under test except to read its public data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdapt/encoder/parameters.h"
#include "mdapt/evaluation/bio.h"
#include "mdapt/evaluation/retrieval.h"

namespace oracle {

// exp(alpha * log c) normalised, straight from the counts in long double.
inline std::vector<double> smoothed_weights(const std::map<std::string, uint64_t>& counts,
                                            double alpha) {
  std::vector<long double> w;
  long double z = 0;
  for (const auto& [lang, c] : counts) {
    const long double v = c == 0 ? 0.0L : std::exp(static_cast<long double>(alpha) *
                                                   std::log(static_cast<long double>(c)));
    w.push_back(v);
    z += v;
  }
  std::vector<double> out;
  for (auto v : w) out.push_back(static_cast<double>(v / z));
  return out;
}

struct SpanCounts {
  size_t tp = 0, fp = 0, fn = 0;
};

// Pairwise comparison of every predicted span against every gold span.
inline SpanCounts count_spans(const std::vector<mdapt::evaluation::SpanMention>& gold,
                              const std::vector<mdapt::evaluation::SpanMention>& pred) {
  SpanCounts c;
  std::vector<bool> used(gold.size(), false);
  for (const auto& p : pred) {
    bool hit = false;
    for (size_t i = 0; i < gold.size() && !hit; ++i) {
      if (!used[i] && gold[i].sentence == p.sentence && gold[i].start == p.start &&
          gold[i].end == p.end && gold[i].label == p.label) {
        used[i] = true;
        hit = true;
      }
    }
    hit ? ++c.tp : ++c.fp;
  }
  for (bool u : used) c.fn += u ? 0 : 1;
  return c;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Full similarity matrix; a pair is a hit when fewer than k targets beat the
// gold one (higher cosine, or equal cosine and smaller id).
inline double precision_at_k(const std::vector<mdapt::evaluation::SentenceVector>& sources,
                             const std::vector<mdapt::evaluation::SentenceVector>& targets,
                             const std::vector<mdapt::evaluation::RetrievalPair>& gold, size_t k) {
  size_t hits = 0;
  for (const auto& pair : gold) {
    const mdapt::evaluation::SentenceVector* s = nullptr;
    const mdapt::evaluation::SentenceVector* t = nullptr;
    for (const auto& x : sources) if (x.id == pair.source_id) s = &x;
    for (const auto& x : targets) if (x.id == pair.target_id) t = &x;
    const double gold_sim = cosine(s->vector, t->vector);
    size_t better = 0;
    for (const auto& other : targets) {
      if (other.id == t->id) continue;
      const double sim = cosine(s->vector, other.vector);
      if (sim > gold_sim || (sim == gold_sim && other.id < t->id)) ++better;
    }
    if (better < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

// |a - n| / max(|a|, |n|, floor), the floor keeping coordinates whose true
// gradient is ~0 from dividing noise by noise.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double worst = 0.0;
  std::string where;
  size_t coordinates = 0;
};

// Central differences over every coordinate of every parameter that received
// an analytic gradient from `loss` (which must rebuild the graph each call).
template <typename LossFn>
GradCheck check_gradients(mdapt::encoder::ParameterStore<double>& params, LossFn loss,
                          double eps, double floor) {
  params.zero_grad();
  mdapt::autograd::backward(loss());
  GradCheck out;
  for (auto& p : params.all()) {
    if (!p.var.requires_grad()) continue;
    using Grad = mdapt::autograd::Matrix<double>;
    const Grad analytic = p.var.has_grad() ? Grad(p.var.grad()) : Grad::Zero(p.var.rows(), p.var.cols());
    for (Eigen::Index i = 0; i < p.var.value().size(); ++i) {
      double& x = p.var.mutable_value().data()[i];
      const double orig = x;
      x = orig + eps;
      const double up = loss().scalar();
      x = orig - eps;
      const double down = loss().scalar();
      x = orig;
      const double numeric = (up - down) / (2 * eps);
      const double r = relative_error(analytic.data()[i], numeric, floor);
      ++out.coordinates;
      if (r > out.worst) {
        out.worst = r;
        out.where = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

}  // namespace oracle
