#pragma once

#include <Eigen/Core>
#include <compare>
#include <cstdint>
#include <utility>
#include <vector>

namespace kgalign {

using Index = std::int64_t;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct Triple {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// A directed multigraph of (head, relation, tail) triples with dense
/// 0-based entity and relation indices. Duplicate triples are permitted;
/// adjacency construction deduplicates them.
struct KnowledgeGraph {
  Index entity_count = 0;
  Index relation_count = 0;
  std::vector<Triple> triples;

  void validate() const;  // throws DataError on out-of-range indices
};

using EntityPair = std::pair<Index, Index>;  // (entity in g1, entity in g2)

/// Two knowledge graphs plus the aligned-entity supervision split.
struct GraphPair {
  KnowledgeGraph g1, g2;
  std::vector<EntityPair> seed_pairs;
  std::vector<EntityPair> test_pairs;

  void validate() const;  // disjointness, at most one pair per entity per side
};

struct Edge {
  Index neighbor = 0;
  Index relation = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Per-entity incident edge lists after optional inverse/self augmentation.
/// Lists are sorted by (neighbor, relation) so reductions are deterministic.
struct AdjacencyIndex {
  std::vector<std::vector<Edge>> edges;
  Index relation_count = 0;  // effective count after augmentation

  Index entity_count() const { return static_cast<Index>(edges.size()); }
  Index edge_count() const;
};

// A triple (h,r,t) yields edge (h -> t, r); with add_inverse also (t -> h,
// r + |R|); with add_self every entity gains (e -> e, r_self) where r_self is
// the single relation index |R|*(1 + add_inverse). Triples are deduplicated
// first so attention is not biased by repeated lines.
AdjacencyIndex build_adjacency(const KnowledgeGraph& g, bool add_inverse, bool add_self);

struct SeedSplit {
  std::vector<EntityPair> train;
  std::vector<EntityPair> test;
};

// Disjoint partition with |train| = round(train_fraction * |pairs|), clamped
// so both sides are non-empty. Deterministic per rng_seed.
SeedSplit split_seeds(const std::vector<EntityPair>& pairs, double train_fraction,
                      std::uint64_t rng_seed);

// In+out degree per entity over deduplicated forward triples (no inverse or
// self augmentation). A triple with head == tail contributes one.
std::vector<Index> entity_degrees(const KnowledgeGraph& g);

}  // namespace kgalign
