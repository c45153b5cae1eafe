// Entity-alignment trainer and evaluator for pairs of knowledge graphs.
//
// Subcommands: train, eval, synth, ablate, importance. Exit codes:
// 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgalign/commands.hpp"
#include "kgalign/errors.hpp"

namespace {

using kgalign::RunConfig;

struct Overrides {
  std::optional<std::string> dataset_dir, mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> epochs, dim, depth, batch_size;
  std::optional<int> threads;
  std::optional<double> learning_rate, dropout, train_fraction;
  std::optional<bool> augment;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--dataset", o.dataset_dir, "Dataset directory (overrides config)");
  cmd->add_option("--mode", o.mode, "basic or semi");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--dim", o.dim, "Embedding width");
  cmd->add_option("--depth", o.depth, "Encoder depth");
  cmd->add_option("--batch-size", o.batch_size, "Batch size");
  cmd->add_option("--threads", o.threads, "Worker threads (1 = deterministic)");
  cmd->add_option("--learning-rate", o.learning_rate, "RMSprop learning rate");
  cmd->add_option("--dropout", o.dropout, "Dropout rate");
  cmd->add_option("--train-fraction", o.train_fraction, "Seed split fraction");
  cmd->add_flag("--augment,!--no-augment", o.augment, "Toggle semi-supervised augmentation");
}

RunConfig effective_config(const std::optional<std::string>& config_path, const Overrides& o) {
  RunConfig cfg;
  if (config_path) cfg = kgalign::load_run_config(*config_path);
  if (o.dataset_dir) cfg.dataset_dir = *o.dataset_dir;
  if (o.mode) cfg.mode = *o.mode;
  if (o.seed) {
    cfg.rng_seed = *o.seed;
    cfg.train.rng_seed = *o.seed;
  }
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.dim) cfg.encoder.dim = *o.dim;
  if (o.depth) cfg.encoder.depth = *o.depth;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.threads) cfg.train.threads = *o.threads;
  if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
  if (o.dropout) cfg.encoder.dropout_rate = *o.dropout;
  if (o.train_fraction) cfg.train_fraction = *o.train_fraction;
  if (o.augment) cfg.train.augment = *o.augment;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph entity alignment"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Overrides overrides;
  std::string out_dir = "out";

  auto* train_cmd = app.add_subcommand("train", "Train a model and evaluate the test split");
  train_cmd->add_option("--config", config_path, "JSON run config");
  train_cmd->add_option("--out", out_dir, "Output directory");
  add_override_flags(train_cmd, overrides);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string checkpoint_dir, eval_dataset;
  std::optional<std::string> report_file, ranks_file;
  bool all_candidates = false;
  std::int64_t eval_csls_k = 10;
  int eval_threads = 1;
  eval_cmd->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "Dataset directory")->required();
  eval_cmd->add_option("--report", report_file, "Write the JSON report here");
  eval_cmd->add_option("--ranks", ranks_file, "Dump per-entity ranks (TSV)");
  eval_cmd->add_option("--csls-k", eval_csls_k, "CSLS neighborhood size");
  eval_cmd->add_option("--threads", eval_threads, "Worker threads");
  eval_cmd->add_flag("--all-candidates", all_candidates, "Rank against every target entity");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic aligned graph pair");
  kgalign::SynthConfig synth_cfg;
  synth_cmd->add_option("--out", out_dir, "Output dataset directory")->required();
  synth_cmd->add_option("--entities", synth_cfg.entity_count, "Entities per graph");
  synth_cmd->add_option("--relations", synth_cfg.relation_count, "Relation count");
  synth_cmd->add_option("--mean-degree", synth_cfg.mean_degree, "Average entity degree");
  synth_cmd->add_option("--noise", synth_cfg.edge_noise, "Edge noise fraction");
  synth_cmd->add_option("--seed-ratio", synth_cfg.seed_ratio, "Seed pair fraction");
  synth_cmd->add_option("--seed", synth_cfg.rng_seed, "RNG seed");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train architecture/loss variants");
  std::vector<std::string> variants;
  double threshold = 0.9;
  ablate_cmd->add_option("--config", config_path, "JSON run config");
  ablate_cmd->add_option("--out", out_dir, "Output directory");
  ablate_cmd->add_option("--variants", variants,
                         "-ra -rp -mhe -pam loss=logsumexp loss=tuns_triplet loss=triplet");
  ablate_cmd->add_option("--threshold", threshold, "Dev Hits@1 threshold for epoch counts");
  add_override_flags(ablate_cmd, overrides);

  auto* importance_cmd = app.add_subcommand("importance", "Relation importance report");
  std::optional<std::string> importance_out;
  importance_cmd->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  importance_cmd->add_option("--out", importance_out, "Write the TSV here (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      const RunConfig cfg = effective_config(config_path, overrides);
      const kgalign::TrainOutputs outputs = kgalign::run_train(cfg, out_dir);
      std::cout << "checkpoint: " << outputs.checkpoint_dir.string() << '\n'
                << "history:    " << outputs.history_file.string() << '\n'
                << "report:     " << outputs.report_file.string() << '\n'
                << "test hits@1 " << outputs.report.hits_at(1) << ", mrr " << outputs.report.mrr
                << '\n'
                << "total wall clock (load+train+eval): " << outputs.total_seconds << " s\n";
      return outputs.result.aborted ? 3 : 0;
    }
    if (eval_cmd->parsed()) {
      kgalign::EvalOptions opts;
      opts.csls_k = eval_csls_k;
      opts.candidates_all = all_candidates;
      std::optional<std::filesystem::path> ranks;
      if (ranks_file) ranks = *ranks_file;
      const kgalign::EvalReport report =
          kgalign::run_eval(checkpoint_dir, eval_dataset, opts, eval_threads, ranks);
      const std::string json = kgalign::to_json(report);
      if (report_file) {
        std::ofstream out(*report_file);
        out << json << '\n';
      }
      std::cout << json << '\n';
      return 0;
    }
    if (synth_cmd->parsed()) {
      kgalign::run_synth(synth_cfg, out_dir);
      std::cout << "wrote dataset to " << out_dir << '\n';
      return 0;
    }
    if (ablate_cmd->parsed()) {
      const RunConfig cfg = effective_config(config_path, overrides);
      const kgalign::AblationOutputs outputs =
          kgalign::run_ablate(cfg, variants, threshold, out_dir);
      std::cout << outputs.table_text;
      return 0;
    }
    if (importance_cmd->parsed()) {
      const std::string tsv = kgalign::run_importance(checkpoint_dir);
      if (importance_out) {
        std::ofstream out(*importance_out);
        out << tsv;
      } else {
        std::cout << tsv;
      }
      return 0;
    }
  } catch (const kgalign::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const kgalign::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const kgalign::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
