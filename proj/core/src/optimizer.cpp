#include "kgalign/optimizer.hpp"

#include <cmath>

#include "kgalign/errors.hpp"

namespace kgalign {

namespace {

void update_rows(Mat& p, const Mat& g, Mat& acc, double lr, double decay, double eps) {
  for (Index r = 0; r < p.rows(); ++r) {
    bool any = false;
    for (Index c = 0; c < g.cols(); ++c)
      if (g(r, c) != 0.0) { any = true; break; }
    if (!any) continue;
    acc.row(r) = decay * acc.row(r) + (1.0 - decay) * g.row(r).cwiseAbs2();
    p.row(r).array() -= lr * g.row(r).array() / (acc.row(r).array() + eps).sqrt();
  }
}

void update_vector(Vec& p, const Vec& g, Vec& acc, double lr, double decay, double eps) {
  if ((g.array() == 0.0).all()) return;
  acc = decay * acc + (1.0 - decay) * g.cwiseAbs2();
  p.array() -= lr * g.array() / (acc.array() + eps).sqrt();
}

}  // namespace

void rmsprop_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                  double learning_rate, double decay, double epsilon) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  update_rows(params.entities, grads.entities, state.acc.entities, learning_rate, decay, epsilon);
  update_rows(params.relations, grads.relations, state.acc.relations, learning_rate, decay,
              epsilon);
  update_rows(params.proxies, grads.proxies, state.acc.proxies, learning_rate, decay, epsilon);
  update_rows(params.gate_weight, grads.gate_weight, state.acc.gate_weight, learning_rate, decay,
              epsilon);
  update_vector(params.attention, grads.attention, state.acc.attention, learning_rate, decay,
                epsilon);
  update_vector(params.gate_bias, grads.gate_bias, state.acc.gate_bias, learning_rate, decay,
                epsilon);
  ++state.step_count;
}

}  // namespace kgalign
