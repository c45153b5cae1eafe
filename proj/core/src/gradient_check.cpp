#include <algorithm>
#include <cmath>

#include "kgalign/grad.hpp"

namespace kgalign {

GradientCheckReport check_against_finite_differences(ParameterSet& params,
                                                     const ParameterSet& analytic,
                                                     const std::function<double()>& loss_fn,
                                                     double step, double tolerance) {
  GradientCheckReport report;
  report.tolerance = tolerance;

  auto probe = [&](const char* name, auto& array, const auto& grad) {
    for (Index r = 0; r < array.rows(); ++r) {
      for (Index c = 0; c < array.cols(); ++c) {
        const double saved = array(r, c);
        array(r, c) = saved + step;
        const double up = loss_fn();
        array(r, c) = saved - step;
        const double down = loss_fn();
        array(r, c) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = grad(r, c);
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        ++report.checked;
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= tolerance) ++report.failures;
        if (report.worst.size() < 5 || rel > report.worst.back().rel_error) {
          report.worst.push_back({name, r, c, a, numeric, rel});
          std::sort(report.worst.begin(), report.worst.end(),
                    [](const auto& x, const auto& y) { return x.rel_error > y.rel_error; });
          if (report.worst.size() > 5) report.worst.pop_back();
        }
      }
    }
  };

  probe("entity_embeddings", params.entities, analytic.entities);
  probe("relation_embeddings", params.relations, analytic.relations);
  probe("attention_vector", params.attention, analytic.attention);
  probe("proxies", params.proxies, analytic.proxies);
  probe("gate_weight", params.gate_weight, analytic.gate_weight);
  probe("gate_bias", params.gate_bias, analytic.gate_bias);
  return report;
}

GradientCheckReport gradient_check(const ParameterSet& params, const MergedGraph& graph,
                                   const EncoderConfig& enc_cfg, const LossConfig& loss_cfg,
                                   const TrainingBatch& batch, double step, double tolerance) {
  // Statistics frozen at the base point so the finite differences see the
  // same stop-gradient loss the adjoints differentiate.
  FrozenStats frozen;
  {
    const ForwardTrace base = forward(params, graph, enc_cfg);
    const Mat input =
        loss_cfg.unit_embeddings ? normalize_rows(base.h_final) : base.h_final;
    nhsm_loss(input, batch.pairs, batch.candidates_g2, batch.candidates_g1, loss_cfg, nullptr,
              nullptr, nullptr, &frozen);
  }
  const GradientResult analytic = compute_gradients(params, graph, enc_cfg, loss_cfg,
                                                    LossKind::kNhsm, batch, nullptr, nullptr);

  ParameterSet probe = params;
  const auto loss_fn = [&]() {
    const ForwardTrace t = forward(probe, graph, enc_cfg);
    const Mat input = loss_cfg.unit_embeddings ? normalize_rows(t.h_final) : t.h_final;
    return nhsm_loss(input, batch.pairs, batch.candidates_g2, batch.candidates_g1, loss_cfg,
                     nullptr, nullptr, &frozen, nullptr);
  };
  return check_against_finite_differences(probe, analytic.grads, loss_fn, step, tolerance);
}

}  // namespace kgalign
