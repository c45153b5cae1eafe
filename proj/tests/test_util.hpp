#pragma once

#include <vector>

#include "kgalign/encoder.hpp"
#include "kgalign/grad.hpp"
#include "kgalign/synth.hpp"

namespace kgtest {

using namespace kgalign;

// 6 entities and 2 relations per side, distinct shapes, every entity reachable.
inline GraphPair tiny_pair() {
  GraphPair p;
  p.g1.entity_count = 6;
  p.g1.relation_count = 2;
  p.g1.triples = {{0, 0, 1}, {1, 0, 2}, {2, 1, 3}, {3, 0, 4}, {4, 1, 5}, {5, 1, 0}, {0, 1, 3}};
  p.g2.entity_count = 6;
  p.g2.relation_count = 2;
  p.g2.triples = {{1, 0, 0}, {2, 0, 1}, {3, 1, 2}, {4, 0, 3}, {5, 1, 4}, {0, 1, 5}, {1, 1, 4}};
  p.seed_pairs = {{0, 1}, {1, 2}, {2, 3}};
  p.test_pairs = {{3, 4}, {4, 5}, {5, 0}};
  return p;
}

struct TinyModel {
  GraphPair pair;
  MergedGraph graph;
  EncoderConfig encoder;
  ParameterSet params;
  TrainingBatch batch;
};

inline TinyModel tiny_model(std::uint64_t seed = 11, Index dim = 4, Index depth = 1,
                            Index proxies = 2) {
  TinyModel m;
  m.pair = tiny_pair();
  const AdjacencyIndex a1 = build_adjacency(m.pair.g1, true, true);
  const AdjacencyIndex a2 = build_adjacency(m.pair.g2, true, true);
  m.graph = MergedGraph::build(a1, a2, m.pair.g1.relation_count, m.pair.g2.relation_count);
  m.encoder.dim = dim;
  m.encoder.depth = depth;
  m.encoder.proxy_count = proxies;
  m.encoder.dropout_rate = 0.0;
  m.params = init_parameters(m.graph.entity_total(), m.graph.relation_total(), m.encoder, seed);

  const Index offset = m.graph.n1;
  for (const auto& [a, b] : m.pair.seed_pairs) m.batch.pairs.emplace_back(a, b + offset);
  for (Index e = 0; e < m.graph.n1; ++e) m.batch.candidates_g1.push_back(e);
  for (Index e = 0; e < m.graph.n2; ++e) m.batch.candidates_g2.push_back(e + offset);
  return m;
}

}  // namespace kgtest
