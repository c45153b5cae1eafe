#include "kgalign/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kgalign/errors.hpp"

namespace kgalign {

void LossConfig::validate() const {
  if (!(margin >= 0.0)) throw ConfigError("loss margin must be >= 0");
  if (!(scale > 0.0)) throw ConfigError("loss scale must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("loss epsilon must be > 0");
  if (!(lse_scale > 0.0)) throw ConfigError("lse_scale must be > 0");
  if (tuns_k < 1) throw ConfigError("tuns_k must be >= 1");
}

double pair_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size()) throw ConfigError("pair_similarity: width mismatch");
  return (a - b).squaredNorm();
}

std::vector<double> raw_pair_losses(const Mat& embeddings, Index anchor, Index positive,
                                    const std::vector<Index>& candidates, double margin) {
  if (candidates.empty()) throw DataError("raw_pair_losses: empty candidate set");
  const double pos = pair_similarity(embeddings.row(anchor), embeddings.row(positive));
  std::vector<double> raw(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c)
    raw[c] = margin + pos - pair_similarity(embeddings.row(anchor),
                                            embeddings.row(candidates[c]));
  return raw;
}

NormalizedLosses normalize_losses(const std::vector<double>& raw, double epsilon) {
  if (raw.empty()) throw DataError("normalize_losses: empty loss list");
  NormalizedLosses out;
  const auto n = static_cast<double>(raw.size());
  double sum = 0.0;
  for (double v : raw) sum += v;
  out.mean = sum / n;
  double sq = 0.0;
  for (double v : raw) sq += (v - out.mean) * (v - out.mean);
  out.variance = sq / n;
  const double denom = std::sqrt(out.variance + epsilon);
  out.normalized.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.normalized[i] = (raw[i] - out.mean) / denom;
  return out;
}

Mat normalize_rows(const Mat& m) {
  Mat out = m;
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm >= 1e-12) out.row(i) /= norm;
  }
  return out;
}

Mat normalize_rows_backward(const Mat& raw, const Mat& grad_normalized) {
  Mat out = Mat::Zero(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    const double norm = raw.row(i).norm();
    if (norm < 1e-12) continue;
    const Eigen::RowVectorXd unit = raw.row(i) / norm;
    const auto g = grad_normalized.row(i);
    out.row(i) = (g - g.dot(unit) * unit) / norm;
  }
  return out;
}

namespace {

// Gathers rows of `m` listed in `ids` into a dense matrix.
Mat gather_rows(const Mat& m, const std::vector<Index>& ids) {
  Mat out(static_cast<Index>(ids.size()), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Index>(i)) = m.row(ids[i]);
  return out;
}

struct DirectionView {
  std::vector<Index> anchors;    // rows of h_final
  std::vector<Index> positives;  // true counterparts, same length
};

// One direction of the bidirectional loss. `exponent(b, c)` maps the raw pair
// loss to the exponent of the log-sum; `weight_scale(b)` is d exponent / d raw
// loss, constant per row for both loss flavors here.
// Masked entries (candidate == own counterpart) contribute nothing.
double mined_direction(const Mat& h_final, const DirectionView& dir,
                       const std::vector<Index>& candidates, double margin, Mat* grad_out,
                       // nhsm-only knobs; null for plain logsumexp
                       const LossConfig* nhsm, double lse_scale,
                       std::vector<DirectionBreakdown>* breakdown,
                       const double* frozen_mean, const double* frozen_var,
                       std::vector<double>* mean_out, std::vector<double>* var_out) {
  const auto batch = static_cast<Index>(dir.anchors.size());
  const auto cand_count = static_cast<Index>(candidates.size());
  if (cand_count == 0) throw DataError("loss: empty candidate set");

  const Mat fa = gather_rows(h_final, dir.anchors);
  const Mat fp = gather_rows(h_final, dir.positives);
  const Mat fc = gather_rows(h_final, candidates);

  const Vec an = fa.rowwise().squaredNorm();
  const Vec cn = fc.rowwise().squaredNorm();
  Mat dist = fa * fc.transpose();
  dist = ((-2.0 * dist).colwise() + an).rowwise() + cn.transpose();
  const Vec pos = (fa - fp).rowwise().squaredNorm();

  // raw losses; the pair's own entities are masked per row (the anchor can
  // sit among the candidates when mining spans both graphs)
  Mat raw = ((-dist).colwise() + pos).array() + margin;
  std::vector<Index> skip_pos(static_cast<std::size_t>(batch), -1);
  std::vector<Index> skip_anchor(static_cast<std::size_t>(batch), -1);
  for (Index b = 0; b < batch; ++b) {
    Index valid = cand_count;
    for (Index c = 0; c < cand_count; ++c) {
      const Index id = candidates[static_cast<std::size_t>(c)];
      if (id == dir.positives[static_cast<std::size_t>(b)]) {
        skip_pos[static_cast<std::size_t>(b)] = c;
        --valid;
      } else if (id == dir.anchors[static_cast<std::size_t>(b)]) {
        skip_anchor[static_cast<std::size_t>(b)] = c;
        --valid;
      }
    }
    if (valid <= 0)
      throw DataError("loss: pair has no candidates besides its own entities");
  }

  double total = 0.0;
  Mat weights;  // d loss / d raw loss, zero at masked entries
  if (grad_out) weights = Mat::Zero(batch, cand_count);

  for (Index b = 0; b < batch; ++b) {
    const Index skip = skip_pos[static_cast<std::size_t>(b)];
    const Index skip2 = skip_anchor[static_cast<std::size_t>(b)];
    const Index valid = cand_count - (skip >= 0 ? 1 : 0) - (skip2 >= 0 ? 1 : 0);

    double mean = 0.0, variance = 0.0, denom = 1.0, row_scale = 1.0;
    if (nhsm) {
      if (frozen_mean) {
        mean = frozen_mean[b];
        variance = frozen_var[b];
      } else {
        double sum = 0.0;
        for (Index c = 0; c < cand_count; ++c)
          if (c != skip && c != skip2) sum += raw(b, c);
        mean = sum / static_cast<double>(valid);
        double sq = 0.0;
        for (Index c = 0; c < cand_count; ++c)
          if (c != skip && c != skip2) sq += (raw(b, c) - mean) * (raw(b, c) - mean);
        variance = sq / static_cast<double>(valid);
      }
      denom = std::sqrt(variance + nhsm->epsilon);
      row_scale = nhsm->scale;
      if (mean_out) (*mean_out)[static_cast<std::size_t>(b)] = mean;
      if (var_out) (*var_out)[static_cast<std::size_t>(b)] = variance;
    } else {
      row_scale = lse_scale;
    }

    // exponents a_c, stable log(exp(-m) + sum exp(a_c - m)) with m >= 0
    double peak = 0.0;
    for (Index c = 0; c < cand_count; ++c) {
      if (c == skip || c == skip2) continue;
      const double a = nhsm ? nhsm->scale * (raw(b, c) - mean) / denom + nhsm->shift
                            : lse_scale * raw(b, c);
      raw(b, c) = a;  // reuse storage for the exponent
      peak = std::max(peak, a);
    }
    double sum_exp = 0.0;
    for (Index c = 0; c < cand_count; ++c) {
      if (c == skip || c == skip2) continue;
      sum_exp += std::exp(raw(b, c) - peak);
    }
    const double z = std::exp(-peak) + sum_exp;
    const double term = peak + std::log(z);
    if (!std::isfinite(term))
      throw NumericError("loss: non-finite term for pair index " + std::to_string(b));
    total += term;

    if (grad_out) {
      const double factor = row_scale / (nhsm ? denom : 1.0);
      for (Index c = 0; c < cand_count; ++c) {
        if (c == skip || c == skip2) continue;
        weights(b, c) = std::exp(raw(b, c) - peak) / z * factor;
      }
    }
    if (breakdown) {
      DirectionBreakdown& bd = (*breakdown)[static_cast<std::size_t>(b)];
      bd.mean = mean;
      bd.variance = variance;
      bd.contribution = term;
      bd.candidates.clear();
      bd.raw.clear();
      bd.normalized.clear();
      for (Index c = 0; c < cand_count; ++c) {
        if (c == skip || c == skip2) continue;
        bd.candidates.push_back(candidates[static_cast<std::size_t>(c)]);
        const double a = raw(b, c);
        const double ln = nhsm ? (a - nhsm->shift) / nhsm->scale : a / lse_scale;
        const double lo = nhsm ? ln * denom + mean : ln;
        bd.raw.push_back(lo);
        bd.normalized.push_back(nhsm ? ln : 0.0);
      }
    }
  }

  if (grad_out) {
    const Vec row_sum = weights.rowwise().sum();
    const Vec col_sum = weights.colwise().sum();
    // d/dfa: the fa terms of s_pos and s_c cancel, leaving candidates vs positive
    Mat dfa = 2.0 * (weights * fc - row_sum.asDiagonal() * fp);
    Mat dfp = -2.0 * (row_sum.asDiagonal() * (fa - fp));
    Mat dfc = 2.0 * (weights.transpose() * fa - col_sum.asDiagonal() * fc);
    for (Index b = 0; b < batch; ++b) {
      grad_out->row(dir.anchors[static_cast<std::size_t>(b)]) += dfa.row(b);
      grad_out->row(dir.positives[static_cast<std::size_t>(b)]) += dfp.row(b);
    }
    for (Index c = 0; c < cand_count; ++c)
      grad_out->row(candidates[static_cast<std::size_t>(c)]) += dfc.row(c);
  }
  return total;
}

DirectionView forward_view(const std::vector<EntityPair>& pairs) {
  DirectionView v;
  v.anchors.reserve(pairs.size());
  v.positives.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    v.anchors.push_back(a);
    v.positives.push_back(b);
  }
  return v;
}

DirectionView reverse_view(const std::vector<EntityPair>& pairs) {
  DirectionView v;
  v.anchors.reserve(pairs.size());
  v.positives.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    v.anchors.push_back(b);
    v.positives.push_back(a);
  }
  return v;
}

double hinge_direction(const Mat& h_final, const DirectionView& dir,
                       const std::vector<std::vector<Index>>& negatives, double margin,
                       Mat* grad_out) {
  double total = 0.0;
  for (std::size_t b = 0; b < dir.anchors.size(); ++b) {
    const Index a = dir.anchors[b];
    const Index p = dir.positives[b];
    const double pos = pair_similarity(h_final.row(a), h_final.row(p));
    for (const Index n : negatives[b]) {
      const double t = margin + pos - pair_similarity(h_final.row(a), h_final.row(n));
      if (t <= 0.0) continue;
      total += t;
      if (grad_out) {
        grad_out->row(a) += 2.0 * (h_final.row(a) - h_final.row(p)) -
                            2.0 * (h_final.row(a) - h_final.row(n));
        grad_out->row(p) -= 2.0 * (h_final.row(a) - h_final.row(p));
        grad_out->row(n) += 2.0 * (h_final.row(a) - h_final.row(n));
      }
    }
  }
  return total;
}

}  // namespace

double nhsm_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                 const std::vector<Index>& candidates_g2,
                 const std::vector<Index>& candidates_g1, const LossConfig& cfg,
                 Mat* grad_out, std::vector<PairLossBreakdown>* breakdown_out,
                 const FrozenStats* frozen, FrozenStats* stats_out) {
  if (pairs.empty()) return 0.0;
  const std::size_t n = pairs.size();
  std::vector<DirectionBreakdown> fwd_bd, rev_bd;
  if (breakdown_out) {
    fwd_bd.resize(n);
    rev_bd.resize(n);
  }
  if (stats_out) {
    stats_out->mean_fwd.resize(n);
    stats_out->var_fwd.resize(n);
    stats_out->mean_rev.resize(n);
    stats_out->var_rev.resize(n);
  }
  double total = mined_direction(
      h_final, forward_view(pairs), candidates_g2, cfg.margin, grad_out, &cfg, 0.0,
      breakdown_out ? &fwd_bd : nullptr, frozen ? frozen->mean_fwd.data() : nullptr,
      frozen ? frozen->var_fwd.data() : nullptr, stats_out ? &stats_out->mean_fwd : nullptr,
      stats_out ? &stats_out->var_fwd : nullptr);
  total += mined_direction(
      h_final, reverse_view(pairs), candidates_g1, cfg.margin, grad_out, &cfg, 0.0,
      breakdown_out ? &rev_bd : nullptr, frozen ? frozen->mean_rev.data() : nullptr,
      frozen ? frozen->var_rev.data() : nullptr, stats_out ? &stats_out->mean_rev : nullptr,
      stats_out ? &stats_out->var_rev : nullptr);
  if (breakdown_out) {
    breakdown_out->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      (*breakdown_out)[i].pair = pairs[i];
      (*breakdown_out)[i].g1_to_g2 = std::move(fwd_bd[i]);
      (*breakdown_out)[i].g2_to_g1 = std::move(rev_bd[i]);
    }
  }
  return total;
}

double logsumexp_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                      const std::vector<Index>& candidates_g2,
                      const std::vector<Index>& candidates_g1, double margin, double lse_scale,
                      Mat* grad_out) {
  if (pairs.empty()) return 0.0;
  double total = mined_direction(h_final, forward_view(pairs), candidates_g2, margin, grad_out,
                                 nullptr, lse_scale, nullptr, nullptr, nullptr, nullptr, nullptr);
  total += mined_direction(h_final, reverse_view(pairs), candidates_g1, margin, grad_out,
                           nullptr, lse_scale, nullptr, nullptr, nullptr, nullptr, nullptr);
  return total;
}

double triplet_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                    const std::vector<Index>& negatives_g2,
                    const std::vector<Index>& negatives_g1, double margin, Mat* grad_out) {
  if (pairs.size() != negatives_g2.size() || pairs.size() != negatives_g1.size())
    throw ConfigError("triplet_loss: one negative per pair per direction required");
  std::vector<std::vector<Index>> neg2(pairs.size()), neg1(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    neg2[i] = {negatives_g2[i]};
    neg1[i] = {negatives_g1[i]};
  }
  return tuns_triplet_loss(h_final, pairs, neg2, neg1, margin, grad_out);
}

double tuns_triplet_loss(const Mat& h_final, const std::vector<EntityPair>& pairs,
                         const std::vector<std::vector<Index>>& negatives_g2,
                         const std::vector<std::vector<Index>>& negatives_g1, double margin,
                         Mat* grad_out) {
  if (pairs.size() != negatives_g2.size() || pairs.size() != negatives_g1.size())
    throw ConfigError("tuns_triplet_loss: negative lists must match the batch");
  double total = hinge_direction(h_final, forward_view(pairs), negatives_g2, margin, grad_out);
  total += hinge_direction(h_final, reverse_view(pairs), negatives_g1, margin, grad_out);
  if (!std::isfinite(total)) throw NumericError("triplet loss is non-finite");
  return total;
}

}  // namespace kgalign
