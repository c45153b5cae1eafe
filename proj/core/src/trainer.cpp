#include "kgalign/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "kgalign/errors.hpp"
#include "kgalign/eval.hpp"

namespace kgalign {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0))
    throw ConfigError("rmsprop_decay must lie in (0,1)");
  if (!(rmsprop_epsilon > 0.0)) throw ConfigError("rmsprop_epsilon must be > 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0))
    throw ConfigError("dev_fraction must lie in [0,1)");
  if (augment_every < 1) throw ConfigError("augment_every must be >= 1");
  if (csls_k < 1) throw ConfigError("csls_k must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Workspace {
  MergedGraph graph;
  std::vector<EntityPair> train_pairs;  // unified ids
  std::vector<EntityPair> dev_pairs;    // unified ids
  std::vector<Index> all_g1, all_g2;    // full candidate sets, unified ids
  std::vector<Index> all_entities;      // both graphs, for kBothGraphs mining
  CandidatePolicy policy = CandidatePolicy::kFull;
};

EntityPair to_unified(const EntityPair& p, Index offset) {
  return {p.first, p.second + offset};
}

struct DevScore {
  double hits1 = -1.0;
  double mrr = -1.0;  // tie-break: finer resolution than Hits@1 on small dev sets
};

DevScore evaluate_dev(const Mat& h_final, const std::vector<EntityPair>& pairs, Index csls_k,
                      const std::vector<Index>& candidate_cols) {
  std::vector<Index> rows;
  rows.reserve(pairs.size());
  for (const auto& [a, b] : pairs) rows.push_back(a);
  SimilarityMatrix sim = similarity_matrix(h_final, rows, candidate_cols, SimMetric::kCosine);
  const Index k = std::clamp<Index>(csls_k, 1, std::min(sim.scores.rows(), sim.scores.cols()));
  sim.scores = csls_adjust(sim.scores, k);
  const std::vector<Index> ranks = ranks_of_truth(sim, pairs);
  DevScore score;
  Index hit = 0;
  double reciprocal = 0.0;
  for (const Index r : ranks) {
    if (r == 1) ++hit;
    reciprocal += 1.0 / static_cast<double>(r);
  }
  const double n = std::max<double>(1.0, static_cast<double>(ranks.size()));
  score.hits1 = static_cast<double>(hit) / n;
  score.mrr = reciprocal / n;
  return score;
}

// Per-epoch mined negatives for the TUNS baseline: exact K-nearest under the
// current embeddings, recomputed from a clean forward pass.
void mine_tuns(const ParameterSet& params, const Workspace& ws, const EncoderConfig& enc,
               const LossConfig& loss_cfg, const std::vector<EntityPair>& pairs, int threads,
               std::vector<std::vector<Index>>& out_g2, std::vector<std::vector<Index>>& out_g1) {
  const ForwardTrace trace = forward(params, ws.graph, enc, nullptr, threads);
  out_g2.resize(pairs.size());
  out_g1.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    out_g2[i] = truncated_uniform_negatives(trace.h_final, a, b, ws.all_g2, loss_cfg.tuns_k);
    out_g1[i] = truncated_uniform_negatives(trace.h_final, b, a, ws.all_g1, loss_cfg.tuns_k);
  }
}

Index sample_negative(Rng& rng, const std::vector<Index>& candidates, Index exclude) {
  if (candidates.size() < 2 && !candidates.empty() && candidates.front() == exclude)
    throw DataError("triplet sampling: no candidate besides the true counterpart");
  while (true) {
    const Index pick = candidates[static_cast<std::size_t>(
        rng.below(static_cast<Index>(candidates.size())))];
    if (pick != exclude) return pick;
  }
}

}  // namespace

TrainResult train(const GraphPair& pair, const EncoderConfig& encoder_cfg,
                  const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  const ParameterSet* warm_start) {
  pair.validate();
  encoder_cfg.validate();
  loss_cfg.validate();
  train_cfg.validate();
  if (pair.seed_pairs.empty()) throw DataError("train: no seed pairs");

  const auto start = Clock::now();

  Workspace ws;
  const AdjacencyIndex adj1 =
      build_adjacency(pair.g1, encoder_cfg.add_inverse, encoder_cfg.add_self);
  const AdjacencyIndex adj2 =
      build_adjacency(pair.g2, encoder_cfg.add_inverse, encoder_cfg.add_self);
  ws.graph = MergedGraph::build(adj1, adj2, pair.g1.relation_count, pair.g2.relation_count);
  const Index offset = ws.graph.n1;

  // Internal dev holdout for early stopping; too few seeds train undivided.
  std::vector<EntityPair> train_local = pair.seed_pairs;
  std::vector<EntityPair> dev_local;
  if (train_cfg.dev_fraction > 0.0 &&
      static_cast<double>(pair.seed_pairs.size()) * train_cfg.dev_fraction >= 1.0 &&
      pair.seed_pairs.size() >= 2) {
    SeedSplit split =
        split_seeds(pair.seed_pairs, 1.0 - train_cfg.dev_fraction, train_cfg.rng_seed);
    train_local = std::move(split.train);
    dev_local = std::move(split.test);
  }
  for (const auto& p : train_local) ws.train_pairs.push_back(to_unified(p, offset));
  for (const auto& p : dev_local) ws.dev_pairs.push_back(to_unified(p, offset));

  ws.all_g1.resize(static_cast<std::size_t>(ws.graph.n1));
  std::iota(ws.all_g1.begin(), ws.all_g1.end(), Index{0});
  ws.all_g2.resize(static_cast<std::size_t>(ws.graph.n2));
  std::iota(ws.all_g2.begin(), ws.all_g2.end(), offset);
  ws.all_entities.resize(static_cast<std::size_t>(ws.graph.entity_total()));
  std::iota(ws.all_entities.begin(), ws.all_entities.end(), Index{0});

  ws.policy = loss_cfg.candidates;
  if (std::max(ws.graph.n1, ws.graph.n2) > train_cfg.in_batch_threshold)
    ws.policy = CandidatePolicy::kInBatch;

  Rng rng(train_cfg.rng_seed);
  ParameterSet params = warm_start
                            ? *warm_start
                            : init_parameters(ws.graph.entity_total(),
                                              ws.graph.relation_total(), encoder_cfg, rng);
  OptimizerState opt = OptimizerState::like(params);

  TrainResult result;
  result.params = params;  // last good checkpoint until something better exists
  result.pool = PseudoPairPool{};

  std::unordered_set<Index> claimed1, claimed2;
  for (const auto& p : pair.seed_pairs) {
    claimed1.insert(p.first);
    claimed2.insert(p.second + offset);
  }

  std::vector<EntityPair> working = ws.train_pairs;
  Index bad_rounds = 0;
  Index eval_index = 0;
  bool have_checkpoint = false;
  DevScore best_score;

  for (Index epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    rng.shuffle(working);

    std::vector<std::vector<Index>> tuns_g2, tuns_g1;
    if (train_cfg.loss_kind == LossKind::kTunsTriplet)
      mine_tuns(params, ws, encoder_cfg, loss_cfg, working, train_cfg.threads, tuns_g2, tuns_g1);

    double epoch_loss = 0.0;
    bool numeric_failure = false;
    const auto batch_count =
        (static_cast<Index>(working.size()) + train_cfg.batch_size - 1) / train_cfg.batch_size;
    for (Index b = 0; b < batch_count && !numeric_failure; ++b) {
      const auto begin = static_cast<std::size_t>(b * train_cfg.batch_size);
      const auto end = std::min(working.size(), begin + static_cast<std::size_t>(train_cfg.batch_size));
      TrainingBatch batch;
      batch.pairs.assign(working.begin() + static_cast<std::ptrdiff_t>(begin),
                         working.begin() + static_cast<std::ptrdiff_t>(end));
      if (ws.policy == CandidatePolicy::kFull) {
        batch.candidates_g1 = ws.all_g1;
        batch.candidates_g2 = ws.all_g2;
      } else if (ws.policy == CandidatePolicy::kBothGraphs) {
        batch.candidates_g1 = ws.all_entities;
        batch.candidates_g2 = ws.all_entities;
      } else {
        for (const auto& [a, bb] : batch.pairs) {
          batch.candidates_g1.push_back(a);
          batch.candidates_g2.push_back(bb);
        }
      }
      if (train_cfg.loss_kind == LossKind::kTriplet) {
        for (const auto& [a, bb] : batch.pairs) {
          batch.negatives_g2.push_back(sample_negative(rng, batch.candidates_g2, bb));
          batch.negatives_g1.push_back(sample_negative(rng, batch.candidates_g1, a));
        }
      } else if (train_cfg.loss_kind == LossKind::kTunsTriplet) {
        for (std::size_t i = begin; i < end; ++i) {
          batch.tuns_g2.push_back(tuns_g2[i]);
          batch.tuns_g1.push_back(tuns_g1[i]);
        }
      }

      try {
        Rng* dropout = encoder_cfg.dropout_rate > 0.0 ? &rng : nullptr;
        GradientResult grad = compute_gradients(params, ws.graph, encoder_cfg, loss_cfg,
                                                train_cfg.loss_kind, batch, dropout);
        epoch_loss += grad.loss;
        rmsprop_step(params, grad.grads, opt, train_cfg.learning_rate, train_cfg.rmsprop_decay,
                     train_cfg.rmsprop_epsilon);
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        numeric_failure = true;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss = epoch_loss / std::max<double>(1.0, static_cast<double>(working.size()));
    result.epochs_run = epoch;

    if (numeric_failure) {
      record.elapsed_seconds = seconds_since(start);
      result.history.push_back(record);
      break;  // result.params already holds the last good checkpoint
    }

    const bool eval_now = (epoch % train_cfg.eval_every == 0) || epoch == train_cfg.epochs;
    bool out_of_patience = false;
    if (eval_now) {
      ++eval_index;
      const ForwardTrace trace =
          forward(params, ws.graph, encoder_cfg, nullptr, train_cfg.threads);
      if (!ws.dev_pairs.empty()) {
        const DevScore score =
            evaluate_dev(trace.h_final, ws.dev_pairs, train_cfg.csls_k, ws.all_g2);
        record.dev_hits1 = score.hits1;
        const bool improved =
            score.hits1 > best_score.hits1 ||
            (score.hits1 == best_score.hits1 && score.mrr > best_score.mrr);
        if (improved) {
          best_score = score;
          result.best_dev_hits1 = score.hits1;
          result.best_epoch = epoch;
          result.params = params;
          have_checkpoint = true;
          bad_rounds = 0;
        } else {
          ++bad_rounds;
          out_of_patience = bad_rounds >= train_cfg.patience;
        }
      }

      if (train_cfg.augment && eval_index % train_cfg.augment_every == 0 &&
          epoch >= train_cfg.augment_warmup_epochs) {
        std::vector<Index> unclaimed1, unclaimed2;
        for (Index e = 0; e < ws.graph.n1; ++e)
          if (!claimed1.count(e) && !result.pool.claimed_g1.count(e)) unclaimed1.push_back(e);
        for (Index e = offset; e < offset + ws.graph.n2; ++e)
          if (!claimed2.count(e) && !result.pool.claimed_g2.count(e)) unclaimed2.push_back(e);
        // Propose from the best checkpoint when one exists: accepted pairs
        // are permanent, so they should come from the strongest model seen.
        const Mat* embeddings = &trace.h_final;
        ForwardTrace best_trace;
        if (have_checkpoint && result.best_epoch != epoch) {
          best_trace = forward(result.params, ws.graph, encoder_cfg, nullptr, train_cfg.threads);
          embeddings = &best_trace.h_final;
        }
        const auto proposals =
            propose_pseudo_pairs(*embeddings, unclaimed1, unclaimed2,
                                 train_cfg.augment_use_csls, train_cfg.csls_k, epoch);
        for (const PseudoPair& p : proposals) {
          result.pool.accept(p);
          working.emplace_back(p.e1, p.e2);
        }
      }
    }
    record.elapsed_seconds = seconds_since(start);
    result.history.push_back(record);
    if (out_of_patience) break;
  }

  if (!have_checkpoint && !result.aborted) result.params = params;
  return result;
}

TrainResult semi_supervised_train(const GraphPair& pair, const EncoderConfig& encoder_cfg,
                                  const LossConfig& loss_cfg, const TrainConfig& train_cfg) {
  TrainConfig cfg = train_cfg;
  cfg.augment = true;
  return train(pair, encoder_cfg, loss_cfg, cfg);
}

std::string history_to_jsonl(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.setf(std::ios::fmtflags(0), std::ios::floatfield);
  out.precision(10);
  for (const EpochRecord& r : history) {
    out << "{\"epoch\": " << r.epoch << ", \"loss\": " << r.loss << ", \"dev_hits1\": ";
    if (r.dev_hits1)
      out << *r.dev_hits1;
    else
      out << "null";
    out << ", \"elapsed_s\": " << r.elapsed_seconds << "}\n";
  }
  return out.str();
}

}  // namespace kgalign
