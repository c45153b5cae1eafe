#pragma once

#include <cstdint>
#include <vector>

#include "kgalign/graph.hpp"

namespace kgalign {

struct SynthConfig {
  Index entity_count = 200;
  Index relation_count = 10;
  double mean_degree = 6.0;    // average in+out degree, so |T| = E * degree / 2
  double edge_noise = 0.0;     // fraction of edges deleted and re-added per side
  double seed_ratio = 0.3;     // fraction of the bijection exposed as seeds
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SyntheticPair {
  GraphPair pair;
  std::vector<Index> bijection;  // bijection[e1] = aligned entity in g2
};

// Samples g1 with the requested mean degree (uniform endpoints and relation,
// no self loops), builds g2 by relabeling the same edge set under a random
// entity permutation, then perturbs each side independently: round(noise*|T|)
// edges deleted and as many random edges added. The bijection is split into
// seed and test pairs by seed_ratio. Deterministic per rng_seed.
SyntheticPair generate_synthetic_pair(const SynthConfig& cfg);

}  // namespace kgalign
