#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgalign/graph.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

struct EncoderConfig {
  Index dim = 100;          // entity/relation embedding width d
  Index depth = 2;          // number of relational attention layers
  Index proxy_count = 64;   // cross-graph proxy vectors
  double dropout_rate = 0.30;

  // Message-passing substrate. Directed-only aggregation strands sink
  // entities, so both default on; flags exist for ablation.
  bool add_inverse = true;
  bool add_self = true;

  // Architecture ablation switches.
  bool relational_attention = true;  // off: uniform edge weights (-RA)
  bool relational_projection = true; // off: aggregate neighbors directly (-RP)
  bool multi_hop = true;             // off: final layer only (-MHE)
  bool proxy_matching = true;        // off: h_final = h_multi (-PAM)

  Index embed_width() const { return multi_hop ? (depth + 1) * dim : dim; }
  void validate() const;
};

/// All trainable arrays. Both graphs share one entity table (graph 2 rows
/// offset by |E1|) and one relation table (graph 2 relations offset by the
/// effective relation count of graph 1).
struct ParameterSet {
  Mat entities;     // |E1|+|E2| x d
  Mat relations;    // effective relations x d
  Vec attention;    // d, the edge-weight vector
  Mat proxies;      // n x D where D = embed_width()
  Mat gate_weight;  // D x D
  Vec gate_bias;    // D

  bool all_finite() const;
};

ParameterSet zeros_like(const ParameterSet& p);

// Applies f(name, array) to every parameter array; f must accept Mat& and
// treats vectors through a 1-row map.
template <typename P, typename F>
void visit_parameter_arrays(P& p, F&& f) {
  f("entity_embeddings", p.entities);
  f("relation_embeddings", p.relations);
  f("attention_vector", p.attention);
  f("proxies", p.proxies);
  f("gate_weight", p.gate_weight);
  f("gate_bias", p.gate_bias);
}

// He initialization: zero-mean normal with std sqrt(2/fan_in) where fan_in is
// the array's feature width (d for entity/relation/attention, D for proxies
// and gate). Deterministic per seed.
ParameterSet init_parameters(Index entity_rows, Index relation_rows, const EncoderConfig& cfg,
                             std::uint64_t rng_seed);
ParameterSet init_parameters(Index entity_rows, Index relation_rows, const EncoderConfig& cfg,
                             Rng& rng);

/// Both graphs merged into one CSR message-passing view. Graph 2 entity ids
/// are offset by n1 and its relation ids by rel1.
struct MergedGraph {
  Index n1 = 0, n2 = 0;              // entity counts
  Index rel1 = 0, rel2 = 0;          // effective (augmented) relation counts
  Index rel1_forward = 0, rel2_forward = 0;  // original relation counts
  std::vector<Index> row_begin;      // size n1+n2+1
  std::vector<Index> neighbor;       // unified entity ids
  std::vector<Index> relation;       // unified relation rows

  Index entity_total() const { return n1 + n2; }
  Index relation_total() const { return rel1 + rel2; }
  Index edge_total() const { return static_cast<Index>(neighbor.size()); }

  static MergedGraph build(const AdjacencyIndex& a1, const AdjacencyIndex& a2,
                           Index rel1_forward, Index rel2_forward);
};

// Householder reflection h - 2(r.h)r with r normalized internally; a relation
// embedding with norm below 1e-12 falls back to the identity (the event is
// counted when a counter is supplied).
Vec relational_projection(const Vec& h, const Vec& r, long* degenerate_counter = nullptr);

// Softmax weights over an entity's incident edges; the logit of an edge
// depends only on its relation (v . h_r), so edges sharing a relation share a
// logit but keep separate softmax terms.
std::vector<double> attention_weights(Index entity, const ParameterSet& params,
                                      const AdjacencyIndex& adj);

// One relational attention layer over a single graph: tanh of the
// attention-weighted sum of reflected neighbor embeddings.
Mat sral_layer(const Mat& h_in, const ParameterSet& params, const AdjacencyIndex& adj);

// Row-wise concatenation of per-layer embeddings, layer 0 first.
Mat multi_hop_concat(const std::vector<Mat>& layers);

// h_p[i] = h[i] - sum_j beta_ij q_j with beta the softmax over proxies of
// cos(h_i, q_j). Zero-norm rows contribute 0 logits (counted). Cost is
// linear in the number of entities.
Mat proxy_match(const Mat& h_multi, const Mat& proxies, Mat* beta_out = nullptr,
                Mat* cos_out = nullptr, long* zero_norm_counter = nullptr);

// eta = sigmoid(M h_p + b); out = eta*h_p + (1-eta)*h_multi elementwise.
Mat gate_combine(const Mat& h_multi, const Mat& h_p, const Mat& gate_weight,
                 const Vec& gate_bias, Mat* eta_out = nullptr);

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
  std::vector<Mat> layer_raw;      // tanh outputs H^0..H^l (H^0 = entity table)
  std::vector<Mat> layer_out;      // post-dropout versions (== raw in eval mode)
  std::vector<Mat> dropout_scale;  // per layer 1..l, empty in eval mode
  Vec edge_attention;              // per merged edge; shared by all layers
  Mat h_multi, h_p, h_final;
  Mat proxy_beta, proxy_cos;       // |E| x n
  Mat gate_eta;
  long degenerate_relations = 0;
  long zero_norm_cosines = 0;
};

// Full forward pass over the merged pair. Dropout (inverted scaling) is
// applied to each layer's output before the next layer and before
// concatenation, only when dropout_rng is given.
ForwardTrace forward(const ParameterSet& params, const MergedGraph& graph,
                     const EncoderConfig& cfg, Rng* dropout_rng = nullptr, int threads = 1);

struct RelationImportance {
  int graph = 1;        // 1 or 2
  Index relation = 0;   // graph-local forward relation index
  double score = 0.0;   // v . h_r
  char bucket = 'M';    // 'H' >= 5, 'M' in [-5,5), 'L' < -5
};

// Importance of every original (forward) relation of both graphs, sorted by
// descending score.
std::vector<RelationImportance> relation_importance(const ParameterSet& params,
                                                    const MergedGraph& graph);

char importance_bucket(double score);

}  // namespace kgalign
