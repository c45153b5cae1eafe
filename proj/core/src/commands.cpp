#include "kgalign/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "kgalign/dataset.hpp"
#include "kgalign/errors.hpp"

namespace kgalign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DatasetBundle {
  KnowledgeGraph g1, g2;
  std::vector<EntityPair> all_pairs;
  RawIdMaps ids;
  std::optional<std::filesystem::path> written_dataset;
};

DatasetBundle obtain_dataset(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  DatasetBundle bundle;
  if (cfg.dataset_dir) {
    LoadedDataset data = load_dataset(*cfg.dataset_dir);
    for (const std::string& w : data.warnings) std::cerr << "warning: " << w << '\n';
    if (data.ref_pairs.empty()) throw DataError("dataset has no aligned pairs to train on");
    bundle.g1 = std::move(data.g1);
    bundle.g2 = std::move(data.g2);
    bundle.all_pairs = std::move(data.ref_pairs);
    bundle.ids = std::move(data.ids);
    return bundle;
  }
  const SyntheticPair synth = generate_synthetic_pair(*cfg.synth);
  bundle.g1 = synth.pair.g1;
  bundle.g2 = synth.pair.g2;
  bundle.all_pairs.reserve(static_cast<std::size_t>(bundle.g1.entity_count));
  for (Index e = 0; e < bundle.g1.entity_count; ++e)
    bundle.all_pairs.emplace_back(e, synth.bijection[static_cast<std::size_t>(e)]);
  // Persist the generated instance so `eval` can rerun against it later.
  const std::filesystem::path data_dir = out_dir / "dataset";
  write_dataset(data_dir, bundle.g1, bundle.g2, bundle.all_pairs);
  bundle.written_dataset = data_dir;
  return bundle;
}

struct TestEvaluation {
  EvalReport report;
  std::vector<Index> ranks;
  std::vector<EntityPair> test_unified;
};

TestEvaluation evaluate_test_pairs(const ParameterSet& params, const EncoderConfig& enc,
                                   const GraphPair& pair, const EvalOptions& opts,
                                   int threads) {
  const AdjacencyIndex adj1 = build_adjacency(pair.g1, enc.add_inverse, enc.add_self);
  const AdjacencyIndex adj2 = build_adjacency(pair.g2, enc.add_inverse, enc.add_self);
  const MergedGraph graph =
      MergedGraph::build(adj1, adj2, pair.g1.relation_count, pair.g2.relation_count);
  const ForwardTrace trace = forward(params, graph, enc, nullptr, threads);

  TestEvaluation out;
  const Index offset = graph.n1;
  std::vector<Index> rows, cols;
  for (const auto& [a, b] : pair.test_pairs) {
    rows.push_back(a);
    cols.push_back(b + offset);
    out.test_unified.emplace_back(a, b + offset);
  }
  if (opts.candidates_all) {
    cols.resize(static_cast<std::size_t>(graph.n2));
    std::iota(cols.begin(), cols.end(), offset);
  }

  SimilarityMatrix sim = similarity_matrix(trace.h_final, rows, cols, opts.metric, threads);
  std::vector<std::string> warnings;
  sim = csls_adjust(sim, std::min<Index>(opts.csls_k, sim.scores.cols()), &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';

  out.report = rank_metrics(sim, out.test_unified, opts.hits_k);
  out.ranks = ranks_of_truth(sim, out.test_unified);

  const std::vector<Index> degrees = entity_degrees(pair.g1);
  std::vector<Index> source_degrees;
  source_degrees.reserve(pair.test_pairs.size());
  for (const auto& [a, b] : pair.test_pairs)
    source_degrees.push_back(degrees[static_cast<std::size_t>(a)]);
  degree_breakdown(out.report, out.ranks, source_degrees);
  return out;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
}

const char* bucket_name(char b) {
  switch (b) {
    case 'H': return "High";
    case 'L': return "Low";
    default: return "Medium";
  }
}

}  // namespace

TrainOutputs run_train(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto start = Clock::now();

  // Load before creating any output so failures leave no partial artifacts.
  DatasetBundle bundle = obtain_dataset(cfg, out_dir);
  const double load_seconds = seconds_since(start);

  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.json", to_json(cfg) + "\n");

  const double train_fraction = cfg.dataset_dir
                                    ? cfg.train_fraction
                                    : cfg.synth->seed_ratio;  // synth seeds play the seed role
  GraphPair pair;
  pair.g1 = bundle.g1;
  pair.g2 = bundle.g2;
  SeedSplit split = split_seeds(bundle.all_pairs, train_fraction, cfg.rng_seed);
  pair.seed_pairs = std::move(split.train);
  pair.test_pairs = std::move(split.test);

  TrainConfig train_cfg = cfg.train;
  train_cfg.rng_seed = cfg.rng_seed;
  const bool semi = cfg.mode == "semi" && cfg.train.augment;
  train_cfg.augment = semi;

  const auto train_start = Clock::now();
  TrainResult result = train(pair, cfg.encoder, cfg.loss, train_cfg);
  const double train_seconds = seconds_since(train_start);
  if (result.aborted)
    std::cerr << "warning: training aborted (" << result.abort_reason
              << "); keeping last good checkpoint\n";

  const auto eval_start = Clock::now();
  TestEvaluation eval = evaluate_test_pairs(result.params, cfg.encoder, pair, cfg.eval,
                                            cfg.train.threads);
  const double eval_seconds = seconds_since(eval_start);

  TrainOutputs outputs;
  outputs.result = std::move(result);
  outputs.report = eval.report;
  outputs.checkpoint_dir = out_dir / "checkpoint";
  outputs.history_file = out_dir / "history.jsonl";
  outputs.report_file = out_dir / "report.json";

  CheckpointMeta meta;
  meta.encoder = cfg.encoder;
  meta.n1 = bundle.g1.entity_count;
  meta.n2 = bundle.g2.entity_count;
  meta.rel1 = bundle.g1.relation_count * (cfg.encoder.add_inverse ? 2 : 1) +
              (cfg.encoder.add_self ? 1 : 0);
  meta.rel2 = bundle.g2.relation_count * (cfg.encoder.add_inverse ? 2 : 1) +
              (cfg.encoder.add_self ? 1 : 0);
  meta.rel1_forward = bundle.g1.relation_count;
  meta.rel2_forward = bundle.g2.relation_count;
  meta.train_fraction = train_fraction;
  meta.split_seed = cfg.rng_seed;
  meta.relation_raw_1 = bundle.ids.relation_raw_1;
  meta.relation_raw_2 = bundle.ids.relation_raw_2;
  meta.relation_name_1 = bundle.ids.relation_name_1;
  meta.relation_name_2 = bundle.ids.relation_name_2;
  save_checkpoint(outputs.checkpoint_dir, outputs.result.params, meta);

  write_text(outputs.history_file, history_to_jsonl(outputs.result.history));
  if (train_cfg.augment) {
    write_text(out_dir / "pool.tsv",
               pool_to_tsv(outputs.result.pool,
                           bundle.ids.entity_raw_1.empty() ? nullptr : &bundle.ids.entity_raw_1,
                           bundle.ids.entity_raw_2.empty() ? nullptr : &bundle.ids.entity_raw_2,
                           bundle.g1.entity_count));
  }

  outputs.total_seconds = seconds_since(start);
  outputs.report.runtime_seconds = outputs.total_seconds;

  nlohmann::json report = nlohmann::json::parse(to_json(outputs.report));
  report["timing"] = {{"total_s", outputs.total_seconds},
                      {"load_s", load_seconds},
                      {"train_s", train_seconds},
                      {"eval_s", eval_seconds}};
  report["mode"] = cfg.mode;
  report["aborted"] = outputs.result.aborted;
  report["best_epoch"] = outputs.result.best_epoch;
  report["epochs_run"] = outputs.result.epochs_run;
  report["pseudo_pairs"] = outputs.result.pool.size();
  write_text(outputs.report_file, report.dump(2) + "\n");
  return outputs;
}

EvalReport run_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& dataset_dir, const EvalOptions& opts,
                    int threads, const std::optional<std::filesystem::path>& ranks_file) {
  const auto start = Clock::now();
  const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
  LoadedDataset data = load_dataset(dataset_dir);
  for (const std::string& w : data.warnings) std::cerr << "warning: " << w << '\n';

  if (data.g1.entity_count != ckpt.meta.n1 || data.g2.entity_count != ckpt.meta.n2)
    throw DataError("checkpoint/dataset mismatch: entity counts differ");
  if (data.g1.relation_count != ckpt.meta.rel1_forward ||
      data.g2.relation_count != ckpt.meta.rel2_forward)
    throw DataError("checkpoint/dataset mismatch: relation counts differ");

  GraphPair pair = split_reference(data, ckpt.meta.train_fraction, ckpt.meta.split_seed);
  TestEvaluation eval =
      evaluate_test_pairs(ckpt.params, ckpt.meta.encoder, pair, opts, threads);

  if (ranks_file) {
    std::ostringstream out;
    for (std::size_t i = 0; i < pair.test_pairs.size(); ++i) {
      const auto& [a, b] = pair.test_pairs[i];
      out << data.ids.entity_raw_1[static_cast<std::size_t>(a)] << '\t'
          << data.ids.entity_raw_2[static_cast<std::size_t>(b)] << '\t' << eval.ranks[i]
          << '\n';
    }
    write_text(*ranks_file, out.str());
  }
  eval.report.runtime_seconds = seconds_since(start);
  return eval.report;
}

void run_synth(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const SyntheticPair synth = generate_synthetic_pair(cfg);
  std::vector<EntityPair> all_pairs;
  all_pairs.reserve(static_cast<std::size_t>(cfg.entity_count));
  for (Index e = 0; e < cfg.entity_count; ++e)
    all_pairs.emplace_back(e, synth.bijection[static_cast<std::size_t>(e)]);
  write_dataset(out_dir, synth.pair.g1, synth.pair.g2, all_pairs);

  std::ostringstream truth;
  for (const auto& [a, b] : all_pairs) truth << a << '\t' << b << '\n';
  write_text(out_dir / "truth_ent_ids", truth.str());
}

std::string run_importance(const std::filesystem::path& checkpoint_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
  MergedGraph shape;
  shape.rel1 = ckpt.meta.rel1;
  shape.rel2 = ckpt.meta.rel2;
  shape.rel1_forward = ckpt.meta.rel1_forward;
  shape.rel2_forward = ckpt.meta.rel2_forward;
  const auto scores = relation_importance(ckpt.params, shape);

  std::ostringstream out;
  out << std::setprecision(10);
  for (const RelationImportance& ri : scores) {
    const auto& raw = ri.graph == 1 ? ckpt.meta.relation_raw_1 : ckpt.meta.relation_raw_2;
    const auto& names = ri.graph == 1 ? ckpt.meta.relation_name_1 : ckpt.meta.relation_name_2;
    const std::int64_t raw_id =
        !raw.empty() ? raw[static_cast<std::size_t>(ri.relation)] : ri.relation;
    const std::string name =
        !names.empty() ? names[static_cast<std::size_t>(ri.relation)] : std::string();
    out << raw_id << '\t' << name << '\t' << ri.score << '\t' << bucket_name(ri.bucket) << '\n';
  }
  return out.str();
}

AblationOutputs run_ablate(const RunConfig& cfg, const std::vector<std::string>& variants,
                           double threshold, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::vector<std::string> names;
  names.push_back("full");
  for (const std::string& v : variants)
    if (v != "full" && v != "loss=nhsm") names.push_back(v);

  AblationOutputs outputs;
  for (const std::string& name : names) {
    RunConfig variant = cfg;
    if (name == "-ra") variant.encoder.relational_attention = false;
    else if (name == "-rp") variant.encoder.relational_projection = false;
    else if (name == "-mhe") variant.encoder.multi_hop = false;
    else if (name == "-pam") variant.encoder.proxy_matching = false;
    else if (name == "loss=logsumexp") variant.train.loss_kind = LossKind::kLogSumExp;
    else if (name == "loss=tuns_triplet") variant.train.loss_kind = LossKind::kTunsTriplet;
    else if (name == "loss=triplet") variant.train.loss_kind = LossKind::kTriplet;
    else if (name != "full") throw ConfigError("unknown ablation variant '" + name + "'");

    const TrainOutputs trained = run_train(variant, out_dir / name);
    AblationRow row;
    row.name = name;
    row.hits1 = trained.report.hits_at(1);
    row.mrr = trained.report.mrr;
    row.seconds_total = trained.total_seconds;
    row.seconds_per_epoch =
        trained.result.epochs_run > 0
            ? trained.result.history.back().elapsed_seconds /
                  static_cast<double>(trained.result.epochs_run)
            : 0.0;
    for (const EpochRecord& r : trained.result.history) {
      if (r.dev_hits1 && *r.dev_hits1 >= threshold) {
        row.epochs_to_threshold = r.epoch;
        break;
      }
    }
    outputs.rows.push_back(std::move(row));
  }

  nlohmann::json j;
  j["threshold"] = threshold;
  nlohmann::json rows = nlohmann::json::array();
  const AblationRow& full = outputs.rows.front();
  for (const AblationRow& row : outputs.rows) {
    nlohmann::json r;
    r["variant"] = row.name;
    r["hits1"] = row.hits1;
    r["mrr"] = row.mrr;
    r["hits1_delta"] = row.hits1 - full.hits1;
    r["mrr_delta"] = row.mrr - full.mrr;
    if (row.epochs_to_threshold)
      r["epochs_to_threshold"] = *row.epochs_to_threshold;
    else
      r["epochs_to_threshold"] = nullptr;
    r["seconds_total"] = row.seconds_total;
    r["seconds_per_epoch"] = row.seconds_per_epoch;
    rows.push_back(std::move(r));
  }
  j["rows"] = rows;
  outputs.json_text = j.dump(2) + "\n";

  std::ostringstream table;
  table << std::left << std::setw(18) << "variant" << std::right << std::setw(9) << "hits@1"
        << std::setw(9) << "mrr" << std::setw(10) << "d_hits1" << std::setw(12) << "epochs@th"
        << std::setw(12) << "s/epoch" << '\n';
  for (const AblationRow& row : outputs.rows) {
    table << std::left << std::setw(18) << row.name << std::right << std::fixed
          << std::setprecision(4) << std::setw(9) << row.hits1 << std::setw(9) << row.mrr
          << std::showpos << std::setw(10) << row.hits1 - full.hits1 << std::noshowpos;
    if (row.epochs_to_threshold)
      table << std::setw(12) << *row.epochs_to_threshold;
    else
      table << std::setw(12) << "-";
    table << std::setw(12) << std::setprecision(4) << row.seconds_per_epoch << '\n';
    table.unsetf(std::ios::fixed);
  }
  outputs.table_text = table.str();

  write_text(out_dir / "ablation.json", outputs.json_text);
  return outputs;
}

}  // namespace kgalign
