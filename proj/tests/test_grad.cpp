#include <cmath>

#include "doctest.h"
#include "test_util.hpp"

using namespace kgalign;

TEST_CASE("finite-difference harness agrees with a quadratic toy loss") {
  EncoderConfig cfg;
  cfg.dim = 3;
  cfg.depth = 1;
  cfg.proxy_count = 2;
  ParameterSet params = init_parameters(4, 3, cfg, 5);
  // loss = 0.5 * sum of squares over every array; gradient = the parameters
  const auto loss_fn = [&]() {
    double total = 0.0;
    visit_parameter_arrays(params, [&](const char*, const auto& a) {
      total += 0.5 * a.squaredNorm();
    });
    return total;
  };
  const ParameterSet analytic = params;
  ParameterSet probe = params;
  // probe and loss must share storage; rebind the lambda to the probe copy
  ParameterSet& bound = probe;
  const auto probe_loss = [&]() {
    double total = 0.0;
    visit_parameter_arrays(bound, [&](const char*, const auto& a) {
      total += 0.5 * a.squaredNorm();
    });
    return total;
  };
  const GradientCheckReport report =
      check_against_finite_differences(probe, analytic, probe_loss, 1e-5, 1e-6);
  CHECK(report.passed());
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("analytic gradients match finite differences on the tiny model") {
  const kgtest::TinyModel m = kgtest::tiny_model();
  LossConfig loss_cfg;  // defaults: margin 1, scale 30, shift 10
  const GradientCheckReport report =
      gradient_check(m.params, m.graph, m.encoder, loss_cfg, m.batch, 1e-4, 1e-3);
  CHECK(report.checked > 100);
  CHECK(report.max_rel_error < 1e-3);
  CHECK(report.passed());
}

TEST_CASE("gradient check catches a corrupted adjoint") {
  const kgtest::TinyModel m = kgtest::tiny_model();
  LossConfig loss_cfg;
  GradientResult analytic = compute_gradients(m.params, m.graph, m.encoder, loss_cfg,
                                              LossKind::kNhsm, m.batch);
  // flip the sign of one well-populated gradient entry
  analytic.grads.entities(0, 0) = -analytic.grads.entities(0, 0);

  FrozenStats frozen;
  const ForwardTrace base = forward(m.params, m.graph, m.encoder);
  nhsm_loss(base.h_final, m.batch.pairs, m.batch.candidates_g2, m.batch.candidates_g1, loss_cfg,
            nullptr, nullptr, nullptr, &frozen);
  ParameterSet probe = m.params;
  const auto loss_fn = [&]() {
    const ForwardTrace t = forward(probe, m.graph, m.encoder);
    return nhsm_loss(t.h_final, m.batch.pairs, m.batch.candidates_g2, m.batch.candidates_g1,
                     loss_cfg, nullptr, nullptr, &frozen, nullptr);
  };
  const GradientCheckReport report =
      check_against_finite_differences(probe, analytic.grads, loss_fn, 1e-4, 1e-3);
  CHECK_FALSE(report.passed());
}

TEST_CASE("empty batch yields all-zero gradients") {
  const kgtest::TinyModel m = kgtest::tiny_model();
  TrainingBatch empty;
  const GradientResult r = compute_gradients(m.params, m.graph, m.encoder, LossConfig{},
                                             LossKind::kNhsm, empty);
  CHECK(r.loss == 0.0);
  visit_parameter_arrays(r.grads, [&](const char*, const auto& a) {
    CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  });
}

TEST_CASE("entities outside the batch receptive field get exactly zero gradient") {
  // Two disconnected 3-cliques per graph; the batch touches only the first.
  GraphPair p;
  p.g1.entity_count = 6;
  p.g1.relation_count = 1;
  p.g1.triples = {{0, 0, 1}, {1, 0, 2}, {3, 0, 4}, {4, 0, 5}};
  p.g2 = p.g1;
  const AdjacencyIndex a1 = build_adjacency(p.g1, true, true);
  const AdjacencyIndex a2 = build_adjacency(p.g2, true, true);
  const MergedGraph graph = MergedGraph::build(a1, a2, 1, 1);

  EncoderConfig enc;
  enc.dim = 4;
  enc.depth = 1;
  enc.proxy_count = 2;
  enc.dropout_rate = 0.0;
  const ParameterSet params =
      init_parameters(graph.entity_total(), graph.relation_total(), enc, 3);

  // In-batch candidates: only entities 0/1 (g1) and their counterparts.
  TrainingBatch batch;
  batch.pairs = {{0, 6}, {1, 7}};
  batch.candidates_g1 = {0, 1};
  batch.candidates_g2 = {6, 7};

  const GradientResult r = compute_gradients(params, graph, enc, LossConfig{}, LossKind::kNhsm,
                                             batch);
  // Entity 3 of g1 (and its receptive field) is in the other component.
  CHECK(r.grads.entities.row(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.grads.entities.row(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.grads.entities.row(9).cwiseAbs().maxCoeff() == 0.0);
  // Touched rows do receive gradient.
  CHECK(r.grads.entities.row(0).cwiseAbs().maxCoeff() > 0.0);
  CHECK(r.grads.entities.row(6).cwiseAbs().maxCoeff() > 0.0);
}
