#pragma once

#include "kgalign/encoder.hpp"

namespace kgalign {

/// RMSprop running mean-square accumulators, same shapes as the parameters.
struct OptimizerState {
  ParameterSet acc;
  long step_count = 0;

  static OptimizerState like(const ParameterSet& p) { return {zeros_like(p), 0}; }
};

// acc <- decay*acc + (1-decay)*g^2; theta <- theta - lr*g/sqrt(acc+epsilon),
// elementwise. Lazy over rows: a parameter row whose gradient row is all
// zero is left bit-identical, accumulator included.
void rmsprop_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                  double learning_rate, double decay, double epsilon);

}  // namespace kgalign
