#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/checkpoint.hpp"
#include "kgalign/run_config.hpp"

namespace kgalign {

struct TrainOutputs {
  std::filesystem::path checkpoint_dir;
  std::filesystem::path history_file;
  std::filesystem::path report_file;
  EvalReport report;
  TrainResult result;
  double total_seconds = 0.0;
};

// Loads (or synthesizes) the dataset, trains per cfg.mode, and writes
// checkpoint/, history.jsonl, report.json and the echoed config.json into
// out_dir. Nothing is written before the dataset loads successfully.
TrainOutputs run_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Loads a checkpoint plus its dataset, reproduces the training-time split,
// and evaluates the test pairs in evaluation mode. Deterministic.
EvalReport run_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& dataset_dir, const EvalOptions& opts,
                    int threads,
                    const std::optional<std::filesystem::path>& ranks_file = std::nullopt);

// Writes the standard dataset layout plus truth_ent_ids (the full bijection).
void run_synth(const SynthConfig& cfg, const std::filesystem::path& out_dir);

// "<relation_raw_id>\t<name>\t<score>\t<bucket>" sorted by descending score.
std::string run_importance(const std::filesystem::path& checkpoint_dir);

struct AblationRow {
  std::string name;
  double hits1 = 0.0;
  double mrr = 0.0;
  std::optional<Index> epochs_to_threshold;
  double seconds_total = 0.0;
  double seconds_per_epoch = 0.0;
};

struct AblationOutputs {
  std::vector<AblationRow> rows;  // first row is the full model
  std::string table_text;
  std::string json_text;
};

// Trains the full model plus each requested variant with a shared seed.
// Variants: -ra, -rp, -mhe, -pam, loss=logsumexp, loss=tuns_triplet,
// loss=triplet. The threshold feeds epochs-to-dev-Hits@1 accounting.
AblationOutputs run_ablate(const RunConfig& cfg, const std::vector<std::string>& variants,
                           double threshold, const std::filesystem::path& out_dir);

}  // namespace kgalign
