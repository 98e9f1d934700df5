#include "mdapt/evaluation/retrieval.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "mdapt/common/error.h"

namespace mdapt::evaluation {
namespace {

void check_norm(const SentenceVector& v) {
  if (v.vector.norm() == 0.0) throw DataError("zero-norm sentence vector for id " + v.id);
}

}  // namespace

Eigen::VectorXd mean_pool(const Eigen::MatrixXd& hidden, std::span<const tokenizer::TokenId> ids,
                          const PoolingOptions& options) {
  if (static_cast<Eigen::Index>(ids.size()) != hidden.rows()) {
    throw DataError("mean_pool: ids and hidden states disagree in length");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(hidden.cols());
  size_t count = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto id = ids[i];
    if (id == tokenizer::kPadId) continue;
    if (!options.include_specials && (id == tokenizer::kClsId || id == tokenizer::kSepId)) continue;
    sum += hidden.row(static_cast<Eigen::Index>(i)).transpose();
    ++count;
  }
  if (count == 0) throw DataError("mean_pool: no positions to pool");
  return sum / static_cast<double>(count);
}

std::vector<std::string> rank_targets(const Eigen::VectorXd& query,
                                      const std::vector<SentenceVector>& targets) {
  const double qn = query.norm();
  std::vector<double> sim(targets.size());
  for (size_t j = 0; j < targets.size(); ++j) {
    sim[j] = query.dot(targets[j].vector) / (qn * targets[j].vector.norm());
  }
  std::vector<size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (sim[a] != sim[b]) return sim[a] > sim[b];
    return targets[a].id < targets[b].id;
  });
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (size_t j : order) ids.push_back(targets[j].id);
  return ids;
}

double retrieve_precision_at_k(const std::vector<SentenceVector>& sources,
                               const std::vector<SentenceVector>& targets,
                               const std::vector<RetrievalPair>& gold, size_t k) {
  if (k == 0 || k > targets.size()) {
    throw DataError("precision@k: k=" + std::to_string(k) + " with " +
                    std::to_string(targets.size()) + " targets");
  }
  std::unordered_map<std::string, const SentenceVector*> by_id;
  for (const auto& s : sources) {
    check_norm(s);
    by_id[s.id] = &s;
  }
  std::unordered_map<std::string, bool> target_ids;
  for (const auto& t : targets) {
    check_norm(t);
    target_ids[t.id] = true;
  }
  if (gold.empty()) throw DataError("precision@k: no gold pairs");
  size_t hits = 0;
  for (const auto& pair : gold) {
    auto it = by_id.find(pair.source_id);
    if (it == by_id.end()) throw DataError("precision@k: unknown source id " + pair.source_id);
    if (!target_ids.count(pair.target_id)) {
      throw DataError("precision@k: gold target " + pair.target_id + " not in target pool");
    }
    const auto ranked = rank_targets(it->second->vector, targets);
    const auto top_end = ranked.begin() + static_cast<std::ptrdiff_t>(k);
    if (std::find(ranked.begin(), top_end, pair.target_id) != top_end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::vector<RetrievalPair> read_alignment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment file " + path.string());
  std::vector<RetrievalPair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected src_id<TAB>tgt_id");
    }
    pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return pairs;
}

}  // namespace mdapt::evaluation
