#pragma once

#include <optional>
#include <vector>

#include "kgalign/graph.hpp"

namespace kgalign {

enum class CandidatePolicy { kFull, kInBatch, kBothGraphs };
enum class LossKind { kNhsm, kLogSumExp, kTunsTriplet, kTriplet };

struct LossConfig {
  double margin = 1.0;    // gamma
  double scale = 30.0;    // lambda: std of the re-centered normalized losses
  double shift = 10.0;    // tau: mean of the re-centered normalized losses
  double epsilon = 1e-8;  // variance guard inside the standardization
  CandidatePolicy candidates = CandidatePolicy::kFull;
  double lse_scale = 1.0;  // lambda of the plain LogSumExp baseline
  Index tuns_k = 10;       // nearest-neighbor count of the TUNS baseline

  // Row-normalize the final embeddings before the alignment loss, bounding
  // the squared L2 similarity to [0,4] (= 2 - 2cos) and matching the cosine
  // test metric. Off reproduces the raw-distance reading of the loss.
  bool unit_embeddings = true;

  void validate() const;
};

// Row-normalized copy (zero rows kept zero), plus the adjoint that maps a
// gradient in the normalized coordinates back to the raw ones.
Mat normalize_rows(const Mat& m);
Mat normalize_rows_backward(const Mat& raw, const Mat& grad_normalized);

// Squared Euclidean distance: the training "similarity" where smaller means
// more similar.
double pair_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b);

// margin + sim(anchor, positive) - sim(anchor, candidate) per candidate. The
// candidate list must already exclude the true counterpart.
std::vector<double> raw_pair_losses(const Mat& embeddings, Index anchor, Index positive,
                                    const std::vector<Index>& candidates, double margin);

struct NormalizedLosses {
  std::vector<double> normalized;
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

// Standardizes raw losses to mean 0 / unit variance using sqrt(var+epsilon);
// all-equal input yields all zeros. The statistics are constants for the
// gradient pass.
NormalizedLosses normalize_losses(const std::vector<double>& raw, double epsilon);

struct DirectionBreakdown {
  std::vector<Index> candidates;  // excludes the true counterpart
  std::vector<double> raw;
  std::vector<double> normalized;
  double mean = 0.0;
  double variance = 0.0;
  double contribution = 0.0;  // this direction's log term
};

struct PairLossBreakdown {
  EntityPair pair;  // unified entity ids
  DirectionBreakdown g1_to_g2;
  DirectionBreakdown g2_to_g1;
};

// Per-pair, per-direction loss statistics frozen at a base point, for
// finite-difference checks that must honor the stop-gradient contract.
struct FrozenStats {
  std::vector<double> mean_fwd, var_fwd;
  std::vector<double> mean_rev, var_rev;
};

// Normalized hard-sample-mining loss over both alignment directions:
//   sum_pairs log[1 + sum_candidates exp(scale * l_n + shift)]
// with l_n the standardized raw losses. Candidate lists hold unified entity
// ids of the opposite graph; each pair's own counterpart is masked out.
// Computed with an overflow-safe rearrangement. When grad_out is given it
// accumulates d loss / d h_final with the statistics treated as constants.
double nhsm_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                 const std::vector<Index>& candidates_g2,
                 const std::vector<Index>& candidates_g1, const LossConfig& cfg,
                 Mat* grad_out = nullptr,
                 std::vector<PairLossBreakdown>* breakdown_out = nullptr,
                 const FrozenStats* frozen = nullptr, FrozenStats* stats_out = nullptr);

// Plain LogSumExp mining, no normalization:
//   sum_pairs log[1 + sum_candidates exp(lse_scale * (margin + s_pos - s_neg))]
double logsumexp_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                      const std::vector<Index>& candidates_g2,
                      const std::vector<Index>& candidates_g1, double margin, double lse_scale,
                      Mat* grad_out = nullptr);

// Hinge over one sampled negative per pair and direction.
double triplet_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                    const std::vector<Index>& negatives_g2,
                    const std::vector<Index>& negatives_g1, double margin,
                    Mat* grad_out = nullptr);

// Hinge summed over the K mined negatives per pair and direction.
double tuns_triplet_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                         const std::vector<std::vector<Index>>& negatives_g2,
                         const std::vector<std::vector<Index>>& negatives_g1, double margin,
                         Mat* grad_out = nullptr);

}  // namespace kgalign
