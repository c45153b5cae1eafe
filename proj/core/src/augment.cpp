#include "kgalign/augment.hpp"

#include <algorithm>
#include <sstream>

#include "kgalign/errors.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/loss.hpp"

namespace kgalign {

void PseudoPairPool::accept(const PseudoPair& p) {
  if (claimed(p.e1, p.e2))
    throw DataError("pseudo pair pool: entity already claimed");
  pairs.push_back(p);
  claimed_g1.insert(p.e1);
  claimed_g2.insert(p.e2);
}

std::vector<Index> truncated_uniform_negatives(const Mat& embeddings, Index anchor,
                                               Index true_counterpart,
                                               const std::vector<Index>& candidates, Index k,
                                               std::vector<std::string>* warnings) {
  if (k < 1) throw ConfigError("truncated_uniform_negatives: k must be >= 1");
  std::vector<std::pair<double, Index>> ranked;
  ranked.reserve(candidates.size());
  for (const Index c : candidates) {
    if (c == true_counterpart) continue;
    ranked.emplace_back(pair_similarity(embeddings.row(anchor), embeddings.row(c)), c);
  }
  if (static_cast<Index>(ranked.size()) < k) {
    if (warnings)
      warnings->push_back("tuns: only " + std::to_string(ranked.size()) +
                          " candidates available for k=" + std::to_string(k));
    k = static_cast<Index>(ranked.size());
  }
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                    ranked.end());
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].second);
  return out;
}

std::vector<PseudoPair> propose_pseudo_pairs(const Mat& embeddings,
                                             const std::vector<Index>& unclaimed_g1,
                                             const std::vector<Index>& unclaimed_g2,
                                             bool use_csls, Index csls_k, Index epoch) {
  std::vector<PseudoPair> accepted;
  if (unclaimed_g1.empty() || unclaimed_g2.empty()) return accepted;

  SimilarityMatrix sim =
      similarity_matrix(embeddings, unclaimed_g1, unclaimed_g2, SimMetric::kCosine);
  if (use_csls) {
    const Index k = std::min<Index>(csls_k, std::min(sim.scores.rows(), sim.scores.cols()));
    sim.scores = csls_adjust(sim.scores, std::max<Index>(1, k));
  }

  const Index nr = sim.scores.rows();
  const Index nc = sim.scores.cols();
  std::vector<Index> best_col(static_cast<std::size_t>(nr));
  std::vector<Index> best_row(static_cast<std::size_t>(nc), -1);
  for (Index i = 0; i < nr; ++i) {
    Index arg = 0;
    for (Index j = 1; j < nc; ++j)
      if (sim.scores(i, j) > sim.scores(i, arg)) arg = j;  // first max wins ties
    best_col[static_cast<std::size_t>(i)] = arg;
  }
  for (Index j = 0; j < nc; ++j) {
    Index arg = 0;
    for (Index i = 1; i < nr; ++i)
      if (sim.scores(i, j) > sim.scores(arg, j)) arg = i;
    best_row[static_cast<std::size_t>(j)] = arg;
  }
  for (Index i = 0; i < nr; ++i) {
    const Index j = best_col[static_cast<std::size_t>(i)];
    if (best_row[static_cast<std::size_t>(j)] != i) continue;  // not mutual
    accepted.push_back({unclaimed_g1[static_cast<std::size_t>(i)],
                        unclaimed_g2[static_cast<std::size_t>(j)], epoch});
  }
  return accepted;
}

std::string pool_to_tsv(const PseudoPairPool& pool, const std::vector<std::int64_t>* raw_g1,
                        const std::vector<std::int64_t>* raw_g2, Index unified_offset_g2) {
  std::ostringstream out;
  for (const PseudoPair& p : pool.pairs) {
    const Index local2 = p.e2 - unified_offset_g2;
    const std::int64_t id1 =
        raw_g1 && !raw_g1->empty() ? (*raw_g1)[static_cast<std::size_t>(p.e1)] : p.e1;
    const std::int64_t id2 =
        raw_g2 && !raw_g2->empty() ? (*raw_g2)[static_cast<std::size_t>(local2)] : local2;
    out << id1 << '\t' << id2 << '\t' << p.epoch << '\n';
  }
  return out.str();
}

}  // namespace kgalign
