#include <cmath>
#include <string>
#include <vector>

#include "kgalign/errors.hpp"
#include "kgalign/grad.hpp"

namespace kgalign {

namespace {

constexpr double kNormFloor = 1e-12;

bool row_nonzero(const Mat& m, Index i) {
  for (Index j = 0; j < m.cols(); ++j)
    if (m(i, j) != 0.0) return true;
  return false;
}

}  // namespace

ParameterSet backward(const ParameterSet& params, const MergedGraph& graph,
                      const EncoderConfig& cfg, const ForwardTrace& trace,
                      const Mat& grad_h_final) {
  const Index total = graph.entity_total();
  const Index d = cfg.dim;
  const Index depth = cfg.depth;
  const Index width = cfg.embed_width();
  if (grad_h_final.rows() != total || grad_h_final.cols() != width)
    throw ConfigError("backward: gradient shape does not match h_final");

  ParameterSet grads = zeros_like(params);

  std::vector<char> active(static_cast<std::size_t>(total), 0);
  std::vector<Index> active_rows;
  for (Index i = 0; i < total; ++i) {
    if (row_nonzero(grad_h_final, i)) {
      active[static_cast<std::size_t>(i)] = 1;
      active_rows.push_back(i);
    }
  }

  // Gate and proxy-matching adjoints.
  Mat grad_multi = Mat::Zero(total, width);
  if (cfg.proxy_matching) {
    const auto rows = static_cast<Index>(active_rows.size());
    Mat grad_hp = Mat::Zero(total, width);
    if (rows > 0) {
      Mat gathered_dz(rows, width), gathered_hp(rows, width);
      for (Index idx = 0; idx < rows; ++idx) {
        const Index i = active_rows[static_cast<std::size_t>(idx)];
        const auto g = grad_h_final.row(i);
        const auto eta = trace.gate_eta.row(i);
        const auto hp = trace.h_p.row(i);
        const auto hm = trace.h_multi.row(i);
        const Eigen::RowVectorXd deta = g.cwiseProduct(hp - hm);
        const Eigen::RowVectorXd dz =
            deta.array() * eta.array() * (1.0 - eta.array());
        gathered_dz.row(idx) = dz;
        gathered_hp.row(idx) = hp;
        grad_hp.row(i) = g.cwiseProduct(eta);
        grad_multi.row(i) = g.cwiseProduct(Eigen::RowVectorXd::Ones(width) - eta);
      }
      grads.gate_weight.noalias() += gathered_dz.transpose() * gathered_hp;
      grads.gate_bias += gathered_dz.colwise().sum().transpose();
      const Mat via_gate = gathered_dz * params.gate_weight;
      for (Index idx = 0; idx < rows; ++idx)
        grad_hp.row(active_rows[static_cast<std::size_t>(idx)]) += via_gate.row(idx);
    }

    const Index n = params.proxies.rows();
    const Vec proxy_norm = params.proxies.rowwise().norm();
    for (const Index i : active_rows) {
      const auto gp = grad_hp.row(i);
      grad_multi.row(i) += gp;
      const double h_norm = trace.h_multi.row(i).norm();
      const Vec dbeta = -(params.proxies * gp.transpose());
      const double mix = trace.proxy_beta.row(i).dot(dbeta.transpose());
      for (Index j = 0; j < n; ++j) {
        const double beta = trace.proxy_beta(i, j);
        const double dcos = beta * (dbeta(j) - mix);
        grads.proxies.row(j) -= beta * gp;
        if (h_norm < kNormFloor || proxy_norm(j) < kNormFloor) continue;  // cosine pinned to 0
        const double inv = 1.0 / (h_norm * proxy_norm(j));
        const double c = trace.proxy_cos(i, j);
        grad_multi.row(i) +=
            dcos * (params.proxies.row(j) * inv - c * trace.h_multi.row(i) / (h_norm * h_norm));
        grads.proxies.row(j) +=
            dcos * (trace.h_multi.row(i) * inv -
                    c * params.proxies.row(j) / (proxy_norm(j) * proxy_norm(j)));
      }
    }
  } else {
    grad_multi = grad_h_final;
  }

  // Split the multi-hop gradient into per-layer slices.
  std::vector<Mat> grad_layer(static_cast<std::size_t>(depth) + 1);
  if (cfg.multi_hop) {
    for (Index k = 0; k <= depth; ++k)
      grad_layer[static_cast<std::size_t>(k)] = grad_multi.middleCols(k * d, d);
  } else {
    for (Index k = 0; k < depth; ++k)
      grad_layer[static_cast<std::size_t>(k)] = Mat::Zero(total, d);
    grad_layer[static_cast<std::size_t>(depth)] = grad_multi;
  }

  // Normalized relation rows for the projection adjoint.
  const Vec rel_norm = params.relations.rowwise().norm();
  Mat rel_unit = params.relations;
  std::vector<char> degenerate(static_cast<std::size_t>(params.relations.rows()), 0);
  for (Index r = 0; r < params.relations.rows(); ++r) {
    if (rel_norm(r) < kNormFloor)
      degenerate[static_cast<std::size_t>(r)] = 1;
    else
      rel_unit.row(r) /= rel_norm(r);
  }

  Vec grad_alpha = Vec::Zero(graph.edge_total());
  const bool training = !trace.dropout_scale.empty();
  std::vector<char> act_layer = active;

  for (Index k = depth; k >= 1; --k) {
    Mat& up = grad_layer[static_cast<std::size_t>(k)];
    Mat& down = grad_layer[static_cast<std::size_t>(k) - 1];
    const Mat& raw = trace.layer_raw[static_cast<std::size_t>(k)];
    const Mat& input = trace.layer_out[static_cast<std::size_t>(k) - 1];
    std::vector<char> scatter(static_cast<std::size_t>(total), 0);

    for (Index i = 0; i < total; ++i) {
      if (!act_layer[static_cast<std::size_t>(i)]) continue;
      Eigen::RowVectorXd dz = up.row(i);
      if (training)
        dz = dz.cwiseProduct(trace.dropout_scale[static_cast<std::size_t>(k) - 1].row(i));
      const Eigen::RowVectorXd ds =
          dz.array() * (1.0 - raw.row(i).array().square());
      if ((ds.array() == 0.0).all()) continue;

      const Index begin = graph.row_begin[static_cast<std::size_t>(i)];
      const Index end = graph.row_begin[static_cast<std::size_t>(i) + 1];
      for (Index e = begin; e < end; ++e) {
        const Index j = graph.neighbor[static_cast<std::size_t>(e)];
        const Index r = graph.relation[static_cast<std::size_t>(e)];
        const double a = trace.edge_attention(e);
        const auto h = input.row(j);
        if (cfg.relational_projection && !degenerate[static_cast<std::size_t>(r)]) {
          const auto unit = rel_unit.row(r);
          const double hd = h.dot(unit);
          grad_alpha(e) += ds.dot(h - 2.0 * hd * unit);
          const Eigen::RowVectorXd g = a * ds;
          const double gd = g.dot(unit);
          down.row(j) += g - 2.0 * gd * unit;
          const Eigen::RowVectorXd dunit = -2.0 * (gd * h + hd * g);
          grads.relations.row(r) += (dunit - dunit.dot(unit) * unit) / rel_norm(r);
        } else {
          grad_alpha(e) += ds.dot(h);
          down.row(j) += a * ds;
        }
        scatter[static_cast<std::size_t>(j)] = 1;
      }
    }

    // Rows with a direct multi-hop slice stay active below this layer.
    if (cfg.multi_hop) {
      for (const Index i : active_rows) scatter[static_cast<std::size_t>(i)] = 1;
    }
    act_layer = std::move(scatter);
  }

  // Attention softmax adjoint; the weights are shared by every layer, so the
  // per-edge contributions were summed above.
  if (cfg.relational_attention) {
    for (Index i = 0; i < total; ++i) {
      const Index begin = graph.row_begin[static_cast<std::size_t>(i)];
      const Index end = graph.row_begin[static_cast<std::size_t>(i) + 1];
      double mix = 0.0;
      for (Index e = begin; e < end; ++e) mix += trace.edge_attention(e) * grad_alpha(e);
      if (mix == 0.0) {
        bool any = false;
        for (Index e = begin; e < end; ++e)
          if (grad_alpha(e) != 0.0) { any = true; break; }
        if (!any) continue;
      }
      for (Index e = begin; e < end; ++e) {
        const double dt = trace.edge_attention(e) * (grad_alpha(e) - mix);
        if (dt == 0.0) continue;
        const Index r = graph.relation[static_cast<std::size_t>(e)];
        grads.attention += dt * params.relations.row(r).transpose();
        grads.relations.row(r) += dt * params.attention.transpose();
      }
    }
  }

  grads.entities = grad_layer[0];
  return grads;
}

GradientResult compute_gradients(const ParameterSet& params, const MergedGraph& graph,
                                 const EncoderConfig& enc_cfg, const LossConfig& loss_cfg,
                                 LossKind kind, const TrainingBatch& batch, Rng* dropout_rng,
                                 const FrozenStats* frozen) {
  GradientResult result;
  result.grads = zeros_like(params);
  if (batch.pairs.empty()) return result;

  const ForwardTrace trace = forward(params, graph, enc_cfg, dropout_rng);
  const Mat& loss_input =
      loss_cfg.unit_embeddings ? normalize_rows(trace.h_final) : trace.h_final;
  Mat grad_final = Mat::Zero(trace.h_final.rows(), trace.h_final.cols());
  switch (kind) {
    case LossKind::kNhsm:
      result.loss = nhsm_loss(loss_input, batch.pairs, batch.candidates_g2,
                              batch.candidates_g1, loss_cfg, &grad_final, nullptr, frozen);
      break;
    case LossKind::kLogSumExp:
      result.loss = logsumexp_loss(loss_input, batch.pairs, batch.candidates_g2,
                                   batch.candidates_g1, loss_cfg.margin, loss_cfg.lse_scale,
                                   &grad_final);
      break;
    case LossKind::kTriplet:
      result.loss = triplet_loss(loss_input, batch.pairs, batch.negatives_g2,
                                 batch.negatives_g1, loss_cfg.margin, &grad_final);
      break;
    case LossKind::kTunsTriplet:
      result.loss = tuns_triplet_loss(loss_input, batch.pairs, batch.tuns_g2, batch.tuns_g1,
                                      loss_cfg.margin, &grad_final);
      break;
  }
  if (!std::isfinite(result.loss)) throw NumericError("compute_gradients: non-finite loss");

  if (loss_cfg.unit_embeddings)
    grad_final = normalize_rows_backward(trace.h_final, grad_final);
  result.grads = backward(params, graph, enc_cfg, trace, grad_final);
  visit_parameter_arrays(result.grads, [](const char* name, const auto& array) {
    if (!array.allFinite())
      throw NumericError(std::string("compute_gradients: non-finite gradient in ") + name);
  });
  return result;
}

}  // namespace kgalign
