#include "kgalign/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "kgalign/errors.hpp"
#include "kgalign/parallel.hpp"

namespace kgalign {

namespace {

constexpr double kNormFloor = 1e-12;

void he_fill(Mat& m, double fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = std * rng.normal();
}

void he_fill(Vec& v, double fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  for (Index i = 0; i < v.size(); ++i) v(i) = std * rng.normal();
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim < 1) throw ConfigError("encoder dim must be >= 1");
  if (depth < 1) throw ConfigError("encoder depth must be >= 1");
  if (proxy_count < 1) throw ConfigError("proxy count must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout_rate must lie in [0,1)");
}

bool ParameterSet::all_finite() const {
  return entities.allFinite() && relations.allFinite() && attention.allFinite() &&
         proxies.allFinite() && gate_weight.allFinite() && gate_bias.allFinite();
}

ParameterSet zeros_like(const ParameterSet& p) {
  ParameterSet z;
  z.entities = Mat::Zero(p.entities.rows(), p.entities.cols());
  z.relations = Mat::Zero(p.relations.rows(), p.relations.cols());
  z.attention = Vec::Zero(p.attention.size());
  z.proxies = Mat::Zero(p.proxies.rows(), p.proxies.cols());
  z.gate_weight = Mat::Zero(p.gate_weight.rows(), p.gate_weight.cols());
  z.gate_bias = Vec::Zero(p.gate_bias.size());
  return z;
}

ParameterSet init_parameters(Index entity_rows, Index relation_rows, const EncoderConfig& cfg,
                             Rng& rng) {
  if (entity_rows < 1 || relation_rows < 1)
    throw ConfigError("init_parameters requires positive entity and relation counts");
  const Index d = cfg.dim;
  const Index width = cfg.embed_width();
  ParameterSet p;
  p.entities.resize(entity_rows, d);
  p.relations.resize(relation_rows, d);
  p.attention.resize(d);
  p.proxies.resize(cfg.proxy_count, width);
  p.gate_weight.resize(width, width);
  p.gate_bias.resize(width);
  he_fill(p.entities, static_cast<double>(d), rng);
  he_fill(p.relations, static_cast<double>(d), rng);
  he_fill(p.attention, static_cast<double>(d), rng);
  he_fill(p.proxies, static_cast<double>(width), rng);
  he_fill(p.gate_weight, static_cast<double>(width), rng);
  he_fill(p.gate_bias, static_cast<double>(width), rng);
  return p;
}

ParameterSet init_parameters(Index entity_rows, Index relation_rows, const EncoderConfig& cfg,
                             std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return init_parameters(entity_rows, relation_rows, cfg, rng);
}

MergedGraph MergedGraph::build(const AdjacencyIndex& a1, const AdjacencyIndex& a2,
                               Index rel1_forward, Index rel2_forward) {
  MergedGraph g;
  g.n1 = a1.entity_count();
  g.n2 = a2.entity_count();
  g.rel1 = a1.relation_count;
  g.rel2 = a2.relation_count;
  g.rel1_forward = rel1_forward;
  g.rel2_forward = rel2_forward;
  g.row_begin.reserve(static_cast<std::size_t>(g.n1 + g.n2 + 1));
  g.row_begin.push_back(0);
  g.neighbor.reserve(static_cast<std::size_t>(a1.edge_count() + a2.edge_count()));
  g.relation.reserve(g.neighbor.capacity());
  for (const auto& list : a1.edges) {
    for (const Edge& e : list) {
      g.neighbor.push_back(e.neighbor);
      g.relation.push_back(e.relation);
    }
    g.row_begin.push_back(static_cast<Index>(g.neighbor.size()));
  }
  for (const auto& list : a2.edges) {
    for (const Edge& e : list) {
      g.neighbor.push_back(e.neighbor + g.n1);
      g.relation.push_back(e.relation + g.rel1);
    }
    g.row_begin.push_back(static_cast<Index>(g.neighbor.size()));
  }
  return g;
}

Vec relational_projection(const Vec& h, const Vec& r, long* degenerate_counter) {
  if (h.size() != r.size())
    throw ConfigError("relational_projection: width mismatch");
  const double norm = r.norm();
  if (norm < kNormFloor) {
    if (degenerate_counter) ++*degenerate_counter;
    return h;
  }
  const Vec unit = r / norm;
  return h - 2.0 * unit.dot(h) * unit;
}

namespace {

// Normalized relation rows plus a flag for near-zero rows (identity fallback).
struct UnitRelations {
  Mat rows;
  std::vector<char> degenerate;
  long degenerate_count = 0;
};

UnitRelations normalize_relations(const Mat& relations) {
  UnitRelations u;
  u.rows = relations;
  u.degenerate.assign(static_cast<std::size_t>(relations.rows()), 0);
  for (Index r = 0; r < relations.rows(); ++r) {
    const double norm = relations.row(r).norm();
    if (norm < kNormFloor) {
      u.degenerate[static_cast<std::size_t>(r)] = 1;
      ++u.degenerate_count;
    } else {
      u.rows.row(r) /= norm;
    }
  }
  return u;
}

// Per-edge softmax weights per entity. Uniform mode ignores the logits.
Vec edge_softmax(const std::vector<Index>& row_begin, const std::vector<Index>& relation,
                 const Mat& relations, const Vec& v, bool relational) {
  const auto entities = static_cast<Index>(row_begin.size()) - 1;
  const auto edges = static_cast<Index>(relation.size());
  Vec logits(edges);
  if (relational) {
    Vec per_relation = relations * v;
    for (Index e = 0; e < edges; ++e) logits(e) = per_relation(relation[static_cast<std::size_t>(e)]);
  }
  Vec alpha(edges);
  for (Index i = 0; i < entities; ++i) {
    const Index begin = row_begin[static_cast<std::size_t>(i)];
    const Index end = row_begin[static_cast<std::size_t>(i) + 1];
    if (begin == end) continue;
    if (!relational) {
      const double w = 1.0 / static_cast<double>(end - begin);
      for (Index e = begin; e < end; ++e) alpha(e) = w;
      continue;
    }
    double peak = logits(begin);
    for (Index e = begin + 1; e < end; ++e) peak = std::max(peak, logits(e));
    double total = 0.0;
    for (Index e = begin; e < end; ++e) {
      alpha(e) = std::exp(logits(e) - peak);
      total += alpha(e);
    }
    for (Index e = begin; e < end; ++e) alpha(e) /= total;
  }
  return alpha;
}

Mat sral_forward(const Mat& h_in, const UnitRelations& rel, const std::vector<Index>& row_begin,
                 const std::vector<Index>& neighbor, const std::vector<Index>& relation,
                 const Vec& alpha, bool project, int threads) {
  const auto entities = static_cast<Index>(row_begin.size()) - 1;
  const Index d = h_in.cols();
  Mat out(entities, d);
  parallel_for(entities, threads, [&](Index begin_row, Index end_row) {
    Eigen::RowVectorXd acc(d);
    for (Index i = begin_row; i < end_row; ++i) {
      acc.setZero();
      const Index begin = row_begin[static_cast<std::size_t>(i)];
      const Index end = row_begin[static_cast<std::size_t>(i) + 1];
      for (Index e = begin; e < end; ++e) {
        const Index j = neighbor[static_cast<std::size_t>(e)];
        const Index r = relation[static_cast<std::size_t>(e)];
        const double a = alpha(e);
        if (project && !rel.degenerate[static_cast<std::size_t>(r)]) {
          const auto unit = rel.rows.row(r);
          const auto h = h_in.row(j);
          acc.noalias() += a * (h - 2.0 * h.dot(unit) * unit);
        } else {
          acc.noalias() += a * h_in.row(j);
        }
      }
      out.row(i) = acc.array().tanh();
    }
  });
  return out;
}

struct Csr {
  std::vector<Index> row_begin, neighbor, relation;
};

Csr csr_of(const AdjacencyIndex& adj) {
  Csr c;
  c.row_begin.push_back(0);
  for (const auto& list : adj.edges) {
    for (const Edge& e : list) {
      c.neighbor.push_back(e.neighbor);
      c.relation.push_back(e.relation);
    }
    c.row_begin.push_back(static_cast<Index>(c.neighbor.size()));
  }
  return c;
}

}  // namespace

std::vector<double> attention_weights(Index entity, const ParameterSet& params,
                                      const AdjacencyIndex& adj) {
  if (entity < 0 || entity >= adj.entity_count())
    throw ConfigError("attention_weights: entity out of range");
  const auto& list = adj.edges[static_cast<std::size_t>(entity)];
  if (list.empty()) throw DataError("attention_weights: entity has no incident edges");
  std::vector<double> logits(list.size());
  for (std::size_t e = 0; e < list.size(); ++e)
    logits[e] = params.attention.dot(params.relations.row(list[e].relation));
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> weights(list.size());
  for (std::size_t e = 0; e < list.size(); ++e) {
    weights[e] = std::exp(logits[e] - peak);
    total += weights[e];
  }
  for (double& w : weights) w /= total;
  return weights;
}

Mat sral_layer(const Mat& h_in, const ParameterSet& params, const AdjacencyIndex& adj) {
  if (!h_in.allFinite()) throw NumericError("sral_layer: non-finite input embeddings");
  if (h_in.rows() != adj.entity_count())
    throw ConfigError("sral_layer: row count does not match adjacency");
  const Csr csr = csr_of(adj);
  const UnitRelations rel = normalize_relations(params.relations);
  const Vec alpha = edge_softmax(csr.row_begin, csr.relation, params.relations,
                                 params.attention, /*relational=*/true);
  return sral_forward(h_in, rel, csr.row_begin, csr.neighbor, csr.relation, alpha,
                      /*project=*/true, /*threads=*/1);
}

Mat multi_hop_concat(const std::vector<Mat>& layers) {
  if (layers.empty()) throw ConfigError("multi_hop_concat: no layers");
  const Index rows = layers.front().rows();
  Index width = 0;
  for (const Mat& m : layers) {
    if (m.rows() != rows) throw ConfigError("multi_hop_concat: mismatched row counts");
    width += m.cols();
  }
  Mat out(rows, width);
  Index offset = 0;
  for (const Mat& m : layers) {
    out.middleCols(offset, m.cols()) = m;
    offset += m.cols();
  }
  return out;
}

Mat proxy_match(const Mat& h_multi, const Mat& proxies, Mat* beta_out, Mat* cos_out,
                long* zero_norm_counter) {
  if (h_multi.cols() != proxies.cols())
    throw ConfigError("proxy_match: width mismatch between embeddings and proxies");
  const Index n = proxies.rows();
  const Index rows = h_multi.rows();

  Vec h_norm = h_multi.rowwise().norm();
  Vec q_norm = proxies.rowwise().norm();
  Mat cosines = h_multi * proxies.transpose();
  long zero_events = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (h_norm(i) < kNormFloor || q_norm(j) < kNormFloor) {
        cosines(i, j) = 0.0;
        ++zero_events;
      } else {
        cosines(i, j) /= h_norm(i) * q_norm(j);
      }
    }
  }
  if (zero_norm_counter) *zero_norm_counter += zero_events;

  Mat beta(rows, n);
  for (Index i = 0; i < rows; ++i) {
    const double peak = cosines.row(i).maxCoeff();
    beta.row(i) = (cosines.row(i).array() - peak).exp();
    beta.row(i) /= beta.row(i).sum();
  }
  Mat h_p = h_multi - beta * proxies;
  if (beta_out) *beta_out = std::move(beta);
  if (cos_out) *cos_out = std::move(cosines);
  return h_p;
}

Mat gate_combine(const Mat& h_multi, const Mat& h_p, const Mat& gate_weight,
                 const Vec& gate_bias, Mat* eta_out) {
  if (h_multi.rows() != h_p.rows() || h_multi.cols() != h_p.cols())
    throw ConfigError("gate_combine: operand shape mismatch");
  Mat z = h_p * gate_weight.transpose();
  z.rowwise() += gate_bias.transpose();
  Mat eta = ((-z.array()).exp() + 1.0).inverse();
  Mat out = eta.array() * h_p.array() + (1.0 - eta.array()) * h_multi.array();
  if (eta_out) *eta_out = std::move(eta);
  return out;
}

ForwardTrace forward(const ParameterSet& params, const MergedGraph& graph,
                     const EncoderConfig& cfg, Rng* dropout_rng, int threads) {
  const Index total = graph.entity_total();
  if (params.entities.rows() != total)
    throw ConfigError("forward: entity table rows do not match the graph pair");
  if (params.relations.rows() != graph.relation_total())
    throw ConfigError("forward: relation table rows do not match the graph pair");
  if (params.entities.cols() != cfg.dim)
    throw ConfigError("forward: entity width does not match config dim");
  if (params.proxies.cols() != cfg.embed_width())
    throw ConfigError("forward: proxy width does not match config");
  if (!params.all_finite()) throw NumericError("forward: non-finite parameters");

  ForwardTrace trace;
  const UnitRelations rel = normalize_relations(params.relations);
  trace.degenerate_relations = rel.degenerate_count;
  trace.edge_attention = edge_softmax(graph.row_begin, graph.relation, params.relations,
                                      params.attention, cfg.relational_attention);

  const Index depth = cfg.depth;
  trace.layer_raw.reserve(static_cast<std::size_t>(depth) + 1);
  trace.layer_out.reserve(static_cast<std::size_t>(depth) + 1);
  trace.layer_raw.push_back(params.entities);
  trace.layer_out.push_back(params.entities);

  const bool training = dropout_rng != nullptr && cfg.dropout_rate > 0.0;
  if (training) trace.dropout_scale.reserve(static_cast<std::size_t>(depth));

  for (Index k = 1; k <= depth; ++k) {
    Mat raw = sral_forward(trace.layer_out.back(), rel, graph.row_begin, graph.neighbor,
                           graph.relation, trace.edge_attention, cfg.relational_projection,
                           threads);
    if (training) {
      const double keep = 1.0 - cfg.dropout_rate;
      Mat scale(total, cfg.dim);
      for (Index i = 0; i < total; ++i)
        for (Index j = 0; j < cfg.dim; ++j)
          scale(i, j) = dropout_rng->unit() < cfg.dropout_rate ? 0.0 : 1.0 / keep;
      trace.layer_out.push_back(raw.array() * scale.array());
      trace.dropout_scale.push_back(std::move(scale));
    } else {
      trace.layer_out.push_back(raw);
    }
    trace.layer_raw.push_back(std::move(raw));
  }

  trace.h_multi = cfg.multi_hop ? multi_hop_concat(trace.layer_out) : trace.layer_out.back();

  if (cfg.proxy_matching) {
    trace.h_p = proxy_match(trace.h_multi, params.proxies, &trace.proxy_beta, &trace.proxy_cos,
                            &trace.zero_norm_cosines);
    trace.h_final = gate_combine(trace.h_multi, trace.h_p, params.gate_weight, params.gate_bias,
                                 &trace.gate_eta);
  } else {
    trace.h_final = trace.h_multi;
  }
  return trace;
}

char importance_bucket(double score) {
  if (score >= 5.0) return 'H';
  if (score >= -5.0) return 'M';
  return 'L';
}

std::vector<RelationImportance> relation_importance(const ParameterSet& params,
                                                    const MergedGraph& graph) {
  std::vector<RelationImportance> out;
  out.reserve(static_cast<std::size_t>(graph.rel1_forward + graph.rel2_forward));
  auto add = [&](int which, Index local, Index row) {
    RelationImportance ri;
    ri.graph = which;
    ri.relation = local;
    ri.score = params.attention.dot(params.relations.row(row));
    ri.bucket = importance_bucket(ri.score);
    out.push_back(ri);
  };
  for (Index r = 0; r < graph.rel1_forward; ++r) add(1, r, r);
  for (Index r = 0; r < graph.rel2_forward; ++r) add(2, r, graph.rel1 + r);
  std::stable_sort(out.begin(), out.end(), [](const RelationImportance& a,
                                              const RelationImportance& b) {
    return a.score > b.score;
  });
  return out;
}

}  // namespace kgalign
