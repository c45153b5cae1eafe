#include "kgalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgalign/errors.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {
namespace {

Triple random_triple(Rng& rng, Index entities, Index relations) {
  Triple t;
  t.head = rng.below(entities);
  t.tail = rng.below(entities - 1);
  if (t.tail >= t.head) ++t.tail;  // no self loops in generated data
  t.relation = rng.below(relations);
  return t;
}

// Deletes exactly `count` random edges and adds as many fresh random ones,
// keeping the triple count (and so the density) unchanged.
void perturb(std::vector<Triple>& triples, Index count, Rng& rng, Index entities,
             Index relations) {
  if (count <= 0) return;
  std::vector<Index> order(triples.size());
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  std::vector<Triple> kept;
  kept.reserve(triples.size());
  for (std::size_t i = static_cast<std::size_t>(count); i < order.size(); ++i)
    kept.push_back(triples[static_cast<std::size_t>(order[i])]);
  for (Index i = 0; i < count; ++i) kept.push_back(random_triple(rng, entities, relations));
  triples = std::move(kept);
}

}  // namespace

void SynthConfig::validate() const {
  if (entity_count < 2) throw ConfigError("synthetic graphs need at least 2 entities");
  if (relation_count < 1) throw ConfigError("synthetic graphs need at least 1 relation");
  if (!(mean_degree > 0.0)) throw ConfigError("mean_degree must be positive");
  if (!(edge_noise >= 0.0 && edge_noise < 1.0)) throw ConfigError("edge_noise must lie in [0,1)");
  if (!(seed_ratio > 0.0 && seed_ratio <= 1.0)) throw ConfigError("seed_ratio must lie in (0,1]");
}

SyntheticPair generate_synthetic_pair(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);

  const Index triple_count = std::max<Index>(
      1, static_cast<Index>(std::llround(static_cast<double>(cfg.entity_count) *
                                         cfg.mean_degree / 2.0)));
  std::vector<Triple> base;
  base.reserve(static_cast<std::size_t>(triple_count));
  for (Index i = 0; i < triple_count; ++i)
    base.push_back(random_triple(rng, cfg.entity_count, cfg.relation_count));

  std::vector<Index> perm(static_cast<std::size_t>(cfg.entity_count));
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm);

  std::vector<Triple> relabeled;
  relabeled.reserve(base.size());
  for (const Triple& t : base)
    relabeled.push_back({perm[static_cast<std::size_t>(t.head)], t.relation,
                         perm[static_cast<std::size_t>(t.tail)]});

  const Index noise_count =
      static_cast<Index>(std::llround(cfg.edge_noise * static_cast<double>(triple_count)));
  std::vector<Triple> t1 = base;
  std::vector<Triple> t2 = std::move(relabeled);
  perturb(t1, noise_count, rng, cfg.entity_count, cfg.relation_count);
  perturb(t2, noise_count, rng, cfg.entity_count, cfg.relation_count);

  SyntheticPair out;
  out.pair.g1 = {cfg.entity_count, cfg.relation_count, std::move(t1)};
  out.pair.g2 = {cfg.entity_count, cfg.relation_count, std::move(t2)};
  out.bijection = perm;

  std::vector<Index> order(static_cast<std::size_t>(cfg.entity_count));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  Index seed_count =
      static_cast<Index>(std::llround(cfg.seed_ratio * static_cast<double>(cfg.entity_count)));
  seed_count = std::clamp<Index>(seed_count, 1, cfg.entity_count);
  for (Index i = 0; i < cfg.entity_count; ++i) {
    const Index e1 = order[static_cast<std::size_t>(i)];
    const EntityPair p{e1, perm[static_cast<std::size_t>(e1)]};
    (i < seed_count ? out.pair.seed_pairs : out.pair.test_pairs).push_back(p);
  }
  out.pair.validate();
  return out;
}

}  // namespace kgalign
