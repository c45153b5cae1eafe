#include "kgalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "kgalign/errors.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

void KnowledgeGraph::validate() const {
  if (entity_count < 0 || relation_count < 0)
    throw DataError("knowledge graph has negative entity or relation count");
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count ||
        t.relation < 0 || t.relation >= relation_count) {
      throw DataError("triple " + std::to_string(i) + " out of range: (" +
                      std::to_string(t.head) + "," + std::to_string(t.relation) + "," +
                      std::to_string(t.tail) + ")");
    }
  }
}

void GraphPair::validate() const {
  g1.validate();
  g2.validate();
  std::unordered_set<Index> used1, used2;
  auto check = [&](const std::vector<EntityPair>& pairs, const char* which) {
    for (const auto& [a, b] : pairs) {
      if (a < 0 || a >= g1.entity_count || b < 0 || b >= g2.entity_count)
        throw DataError(std::string(which) + " pair references unknown entity");
      if (!used1.insert(a).second)
        throw DataError("entity " + std::to_string(a) + " appears in two pairs (g1 side)");
      if (!used2.insert(b).second)
        throw DataError("entity " + std::to_string(b) + " appears in two pairs (g2 side)");
    }
  };
  check(seed_pairs, "seed");
  check(test_pairs, "test");
}

Index AdjacencyIndex::edge_count() const {
  Index n = 0;
  for (const auto& e : edges) n += static_cast<Index>(e.size());
  return n;
}

AdjacencyIndex build_adjacency(const KnowledgeGraph& g, bool add_inverse, bool add_self) {
  g.validate();
  std::vector<Triple> unique = g.triples;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  AdjacencyIndex adj;
  adj.edges.resize(static_cast<std::size_t>(g.entity_count));
  adj.relation_count = g.relation_count * (add_inverse ? 2 : 1) + (add_self ? 1 : 0);
  const Index self_relation = g.relation_count * (add_inverse ? 2 : 1);

  for (const Triple& t : unique) {
    adj.edges[static_cast<std::size_t>(t.head)].push_back({t.tail, t.relation});
    if (add_inverse)
      adj.edges[static_cast<std::size_t>(t.tail)].push_back(
          {t.head, t.relation + g.relation_count});
  }
  if (add_self) {
    for (Index e = 0; e < g.entity_count; ++e)
      adj.edges[static_cast<std::size_t>(e)].push_back({e, self_relation});
  }
  for (auto& list : adj.edges) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

SeedSplit split_seeds(const std::vector<EntityPair>& pairs, double train_fraction,
                      std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  const auto n = static_cast<Index>(pairs.size());
  if (n < 2) throw DataError("split_seeds requires at least 2 pairs");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(rng_seed);
  rng.shuffle(order);

  Index train_count = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
  train_count = std::clamp<Index>(train_count, 1, n - 1);

  SeedSplit split;
  split.train.reserve(static_cast<std::size_t>(train_count));
  split.test.reserve(static_cast<std::size_t>(n - train_count));
  for (Index i = 0; i < n; ++i) {
    const EntityPair& p = pairs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    (i < train_count ? split.train : split.test).push_back(p);
  }
  return split;
}

std::vector<Index> entity_degrees(const KnowledgeGraph& g) {
  std::vector<Triple> unique = g.triples;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<Index> deg(static_cast<std::size_t>(g.entity_count), 0);
  for (const Triple& t : unique) {
    deg[static_cast<std::size_t>(t.head)] += 1;
    if (t.tail != t.head) deg[static_cast<std::size_t>(t.tail)] += 1;
  }
  return deg;
}

}  // namespace kgalign
