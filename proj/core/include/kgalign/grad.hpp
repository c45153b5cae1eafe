#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kgalign/encoder.hpp"
#include "kgalign/loss.hpp"

namespace kgalign {

/// One optimizer step's worth of supervision, in unified entity ids.
struct TrainingBatch {
  std::vector<EntityPair> pairs;
  std::vector<Index> candidates_g2, candidates_g1;       // mined losses
  std::vector<Index> negatives_g2, negatives_g1;         // triplet: 1 per pair
  std::vector<std::vector<Index>> tuns_g2, tuns_g1;      // tuns: K per pair
};

// Adjoint of forward(): accumulates d loss / d parameters from
// d loss / d h_final. Parameters outside the receptive field of nonzero
// gradient rows receive exactly zero.
ParameterSet backward(const ParameterSet& params, const MergedGraph& graph,
                      const EncoderConfig& cfg, const ForwardTrace& trace,
                      const Mat& grad_h_final);

struct GradientResult {
  double loss = 0.0;
  ParameterSet grads;
};

// forward (training mode when dropout_rng is given) composed with the
// selected loss; the loss statistics of the normalized loss are constants for
// the gradient. Throws NumericError naming the parameter array when any
// gradient is non-finite.
GradientResult compute_gradients(const ParameterSet& params, const MergedGraph& graph,
                                 const EncoderConfig& enc_cfg, const LossConfig& loss_cfg,
                                 LossKind kind, const TrainingBatch& batch,
                                 Rng* dropout_rng = nullptr,
                                 const FrozenStats* frozen = nullptr);

struct GradientCheckEntry {
  std::string array;
  Index row = 0, col = 0;
  double analytic = 0.0, numeric = 0.0, rel_error = 0.0;
};

struct GradientCheckReport {
  Index checked = 0;
  Index failures = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::vector<GradientCheckEntry> worst;  // up to 5, largest error first

  bool passed() const { return failures == 0; }
};

// Central finite differences of loss_fn against the supplied analytic
// gradient; relative error |a-n| / max(|a|,|n|,1e-8). The probe mutates
// params, so loss_fn must read through the same reference.
GradientCheckReport check_against_finite_differences(ParameterSet& params,
                                                     const ParameterSet& analytic,
                                                     const std::function<double()>& loss_fn,
                                                     double step, double tolerance);

// Gradient check of nhsm_loss composed with an evaluation-mode forward pass;
// the finite-difference side evaluates with the loss statistics frozen at the
// base point, matching the stop-gradient contract.
GradientCheckReport gradient_check(const ParameterSet& params, const MergedGraph& graph,
                                   const EncoderConfig& enc_cfg, const LossConfig& loss_cfg,
                                   const TrainingBatch& batch, double step, double tolerance);

}  // namespace kgalign
