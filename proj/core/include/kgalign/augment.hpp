#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "kgalign/graph.hpp"

namespace kgalign {

struct PseudoPair {
  Index e1 = 0, e2 = 0;  // unified entity ids
  Index epoch = 0;       // epoch of acceptance
};

/// Accepted pseudo pairs. Entities are claimed at acceptance and pairs are
/// never revoked, so no entity can appear in two pairs.
struct PseudoPairPool {
  std::vector<PseudoPair> pairs;
  std::unordered_set<Index> claimed_g1, claimed_g2;

  bool claimed(Index e1, Index e2) const {
    return claimed_g1.count(e1) > 0 || claimed_g2.count(e2) > 0;
  }
  void accept(const PseudoPair& p);
  std::size_t size() const { return pairs.size(); }
};

// The K candidates nearest to the anchor by squared L2 distance on the
// current embeddings, exact (full ranking), excluding the true counterpart;
// ties resolved toward the lower entity index. Fewer than K candidates
// returns them all with a warning.
std::vector<Index> truncated_uniform_negatives(const Mat& embeddings, Index anchor,
                                               Index true_counterpart,
                                               const std::vector<Index>& candidates, Index k,
                                               std::vector<std::string>* warnings = nullptr);

// Mutual-nearest-neighbor proposals between the unclaimed entities of both
// sides; similarity is cosine, CSLS-adjusted when use_csls is set. A pair is
// accepted iff each member is the other's nearest unclaimed counterpart.
std::vector<PseudoPair> propose_pseudo_pairs(const Mat& embeddings,
                                             const std::vector<Index>& unclaimed_g1,
                                             const std::vector<Index>& unclaimed_g2,
                                             bool use_csls, Index csls_k, Index epoch);

// Tab-separated "<g1_id>\t<g2_id>\t<epoch>" audit dump.
std::string pool_to_tsv(const PseudoPairPool& pool,
                        const std::vector<std::int64_t>* raw_g1 = nullptr,
                        const std::vector<std::int64_t>* raw_g2 = nullptr,
                        Index unified_offset_g2 = 0);

}  // namespace kgalign
