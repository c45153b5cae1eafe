#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/eval.hpp"
#include "kgalign/synth.hpp"
#include "kgalign/trainer.hpp"

namespace kgalign {

struct EvalOptions {
  Index csls_k = 10;
  std::vector<Index> hits_k = {1, 10};
  SimMetric metric = SimMetric::kCosine;
  bool candidates_all = false;  // rank against all g2 entities, not just test targets
  bool dump_ranks = false;

  void validate() const;
};

/// One reproducible run: dataset (on disk or synthesized), model and training
/// knobs, and evaluation options. Unknown JSON keys are rejected.
struct RunConfig {
  std::string mode = "basic";  // basic | semi
  std::optional<std::string> dataset_dir;
  std::optional<SynthConfig> synth;  // used when dataset_dir is absent
  double train_fraction = 0.3;
  std::uint64_t rng_seed = 1;
  EncoderConfig encoder;
  LossConfig loss;
  TrainConfig train;
  EvalOptions eval;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);
std::string to_json(const RunConfig& cfg);

}  // namespace kgalign
