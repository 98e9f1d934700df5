#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdapt/tokenizer/vocabulary.h"

namespace mdapt::evaluation {

struct PoolingOptions {
  bool include_specials = true;  // [CLS]/[SEP] take part; [PAD] never does
};

// Mean of the rows of `hidden` (n x d) at non-pad positions. Throws DataError
// when no position qualifies.
Eigen::VectorXd mean_pool(const Eigen::MatrixXd& hidden, std::span<const tokenizer::TokenId> ids,
                          const PoolingOptions& options = {});

struct SentenceVector {
  std::string id;
  Eigen::VectorXd vector;
};

struct RetrievalPair {
  std::string source_id;
  std::string target_id;
};

// Target ids ordered by cosine similarity to `query`, ties by ascending id.
std::vector<std::string> rank_targets(const Eigen::VectorXd& query,
                                      const std::vector<SentenceVector>& targets);

// Fraction of pairs whose gold target is among the k most similar targets.
// Throws DataError for a zero-norm vector (naming it), an unknown id, or
// k > |targets|.
double retrieve_precision_at_k(const std::vector<SentenceVector>& sources,
                               const std::vector<SentenceVector>& targets,
                               const std::vector<RetrievalPair>& gold, size_t k);

// `src_id<TAB>tgt_id` lines.
std::vector<RetrievalPair> read_alignment(const std::filesystem::path& path);

}  // namespace mdapt::evaluation
