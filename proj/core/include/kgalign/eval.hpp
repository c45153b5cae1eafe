#pragma once

#include <string>
#include <vector>

#include "kgalign/graph.hpp"

namespace kgalign {

enum class SimMetric { kNegL2, kCosine };

/// Dense test-time scores, higher = better match.
struct SimilarityMatrix {
  Mat scores;
  std::vector<Index> row_entities;  // source entities (unified or local ids)
  std::vector<Index> col_entities;  // target candidates
};

SimilarityMatrix similarity_matrix(const Mat& embeddings, const std::vector<Index>& rows,
                                   const std::vector<Index>& cols, SimMetric metric,
                                   int threads = 1);

// Cross-domain similarity local scaling: 2*S(i,j) - r_src(i) - r_tgt(j) where
// r_src(i) is the mean of row i's k largest scores and r_tgt(j) the mean of
// column j's k largest. k larger than either dimension is clamped (warned).
Mat csls_adjust(const Mat& scores, Index k, std::vector<std::string>* warnings = nullptr);
SimilarityMatrix csls_adjust(const SimilarityMatrix& sim, Index k,
                             std::vector<std::string>* warnings = nullptr);

struct DegreeBucket {
  std::string label;
  Index count = 0;
  double hits1 = 0.0;
};

struct EvalReport {
  std::vector<std::pair<Index, double>> hits;  // (k, Hits@k), ascending k
  double mrr = 0.0;
  Index test_count = 0;
  std::vector<DegreeBucket> degree_buckets;
  double runtime_seconds = 0.0;

  double hits_at(Index k) const;
};

// Pessimistic rank of each row's true column: equal-scored rivals all rank
// ahead of the truth. Throws DataError when a row's truth is not a column.
std::vector<Index> ranks_of_truth(const SimilarityMatrix& sim,
                                  const std::vector<EntityPair>& truth);

EvalReport rank_metrics(const SimilarityMatrix& sim, const std::vector<EntityPair>& truth,
                        const std::vector<Index>& k_list);

// Buckets 1,2,3,4,5,6+ by source-entity degree (degree <= 1 shares the first
// bucket). Bucket counts partition the test set.
void degree_breakdown(EvalReport& report, const std::vector<Index>& ranks,
                      const std::vector<Index>& source_degrees);

std::string to_json(const EvalReport& report);

}  // namespace kgalign
