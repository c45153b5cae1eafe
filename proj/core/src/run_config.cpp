#include "kgalign/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "json.hpp"
#include "kgalign/errors.hpp"

namespace kgalign {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const char* scope,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key))
      throw ConfigError(std::string("config: unknown key '") + key + "' in " + scope);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: malformed value for '") + key + "'");
  }
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "nhsm") return LossKind::kNhsm;
  if (s == "logsumexp") return LossKind::kLogSumExp;
  if (s == "tuns_triplet") return LossKind::kTunsTriplet;
  if (s == "triplet") return LossKind::kTriplet;
  throw ConfigError("config: unknown loss kind '" + s + "'");
}

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kNhsm: return "nhsm";
    case LossKind::kLogSumExp: return "logsumexp";
    case LossKind::kTunsTriplet: return "tuns_triplet";
    case LossKind::kTriplet: return "triplet";
  }
  return "nhsm";
}

}  // namespace

void EvalOptions::validate() const {
  if (csls_k < 1) throw ConfigError("eval.csls_k must be >= 1");
  if (hits_k.empty()) throw ConfigError("eval.hits_k must not be empty");
  for (const Index k : hits_k)
    if (k < 1) throw ConfigError("eval.hits_k entries must be >= 1");
}

void RunConfig::validate() const {
  if (mode != "basic" && mode != "semi")
    throw ConfigError("config: mode must be 'basic' or 'semi'");
  if (!dataset_dir && !synth)
    throw ConfigError("config: either dataset_dir or a synth block is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("config: train_fraction must lie strictly between 0 and 1");
  encoder.validate();
  loss.validate();
  train.validate();
  eval.validate();
  if (synth) synth->validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "the top level",
                 {"mode", "dataset_dir", "synth", "train_fraction", "rng_seed", "encoder",
                  "loss", "train", "eval"});

  RunConfig cfg;
  read(j, "mode", cfg.mode);
  if (j.contains("dataset_dir")) {
    std::string dir;
    read(j, "dataset_dir", dir);
    cfg.dataset_dir = dir;
  }
  read(j, "train_fraction", cfg.train_fraction);
  read(j, "rng_seed", cfg.rng_seed);

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    reject_unknown(s, "synth",
                   {"entities", "relations", "mean_degree", "edge_noise", "seed_ratio",
                    "rng_seed"});
    SynthConfig sc;
    read(s, "entities", sc.entity_count);
    read(s, "relations", sc.relation_count);
    read(s, "mean_degree", sc.mean_degree);
    read(s, "edge_noise", sc.edge_noise);
    read(s, "seed_ratio", sc.seed_ratio);
    read(s, "rng_seed", sc.rng_seed);
    cfg.synth = sc;
  }

  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    reject_unknown(e, "encoder",
                   {"dim", "depth", "proxy_count", "dropout_rate", "add_inverse", "add_self",
                    "relational_attention", "relational_projection", "multi_hop",
                    "proxy_matching"});
    read(e, "dim", cfg.encoder.dim);
    read(e, "depth", cfg.encoder.depth);
    read(e, "proxy_count", cfg.encoder.proxy_count);
    read(e, "dropout_rate", cfg.encoder.dropout_rate);
    read(e, "add_inverse", cfg.encoder.add_inverse);
    read(e, "add_self", cfg.encoder.add_self);
    read(e, "relational_attention", cfg.encoder.relational_attention);
    read(e, "relational_projection", cfg.encoder.relational_projection);
    read(e, "multi_hop", cfg.encoder.multi_hop);
    read(e, "proxy_matching", cfg.encoder.proxy_matching);
  }

  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, "loss",
                   {"kind", "margin", "scale", "shift", "epsilon", "candidates", "lse_scale",
                    "tuns_k"});
    std::string kind = "nhsm", candidates = "full";
    read(l, "kind", kind);
    cfg.train.loss_kind = parse_loss_kind(kind);
    read(l, "margin", cfg.loss.margin);
    read(l, "scale", cfg.loss.scale);
    read(l, "shift", cfg.loss.shift);
    read(l, "epsilon", cfg.loss.epsilon);
    read(l, "candidates", candidates);
    if (candidates == "full")
      cfg.loss.candidates = CandidatePolicy::kFull;
    else if (candidates == "in_batch")
      cfg.loss.candidates = CandidatePolicy::kInBatch;
    else if (candidates == "both_graphs")
      cfg.loss.candidates = CandidatePolicy::kBothGraphs;
    else
      throw ConfigError("config: loss.candidates must be 'full', 'in_batch' or 'both_graphs'");
    read(l, "lse_scale", cfg.loss.lse_scale);
    read(l, "tuns_k", cfg.loss.tuns_k);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, "train",
                   {"learning_rate", "batch_size", "epochs", "rmsprop_decay", "rmsprop_epsilon",
                    "eval_every", "patience", "dev_fraction", "threads", "in_batch_threshold",
                    "csls_k", "augment", "augment_every", "augment_use_csls",
                    "augment_warmup_epochs"});
    read(t, "learning_rate", cfg.train.learning_rate);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "epochs", cfg.train.epochs);
    read(t, "rmsprop_decay", cfg.train.rmsprop_decay);
    read(t, "rmsprop_epsilon", cfg.train.rmsprop_epsilon);
    read(t, "eval_every", cfg.train.eval_every);
    read(t, "patience", cfg.train.patience);
    read(t, "dev_fraction", cfg.train.dev_fraction);
    read(t, "threads", cfg.train.threads);
    read(t, "in_batch_threshold", cfg.train.in_batch_threshold);
    read(t, "csls_k", cfg.train.csls_k);
    read(t, "augment", cfg.train.augment);
    read(t, "augment_every", cfg.train.augment_every);
    read(t, "augment_use_csls", cfg.train.augment_use_csls);
    read(t, "augment_warmup_epochs", cfg.train.augment_warmup_epochs);
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, "eval", {"csls_k", "hits_k", "metric", "candidates_all", "dump_ranks"});
    read(e, "csls_k", cfg.eval.csls_k);
    read(e, "hits_k", cfg.eval.hits_k);
    std::string metric = "cosine";
    read(e, "metric", metric);
    if (metric == "cosine")
      cfg.eval.metric = SimMetric::kCosine;
    else if (metric == "neg_l2")
      cfg.eval.metric = SimMetric::kNegL2;
    else
      throw ConfigError("config: eval.metric must be 'cosine' or 'neg_l2'");
    read(e, "candidates_all", cfg.eval.candidates_all);
    read(e, "dump_ranks", cfg.eval.dump_ranks);
  }

  cfg.train.rng_seed = cfg.rng_seed;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string to_json(const RunConfig& cfg) {
  json j;
  j["mode"] = cfg.mode;
  if (cfg.dataset_dir) j["dataset_dir"] = *cfg.dataset_dir;
  if (cfg.synth) {
    j["synth"] = {{"entities", cfg.synth->entity_count},
                  {"relations", cfg.synth->relation_count},
                  {"mean_degree", cfg.synth->mean_degree},
                  {"edge_noise", cfg.synth->edge_noise},
                  {"seed_ratio", cfg.synth->seed_ratio},
                  {"rng_seed", cfg.synth->rng_seed}};
  }
  j["train_fraction"] = cfg.train_fraction;
  j["rng_seed"] = cfg.rng_seed;
  j["encoder"] = {{"dim", cfg.encoder.dim},
                  {"depth", cfg.encoder.depth},
                  {"proxy_count", cfg.encoder.proxy_count},
                  {"dropout_rate", cfg.encoder.dropout_rate},
                  {"add_inverse", cfg.encoder.add_inverse},
                  {"add_self", cfg.encoder.add_self},
                  {"relational_attention", cfg.encoder.relational_attention},
                  {"relational_projection", cfg.encoder.relational_projection},
                  {"multi_hop", cfg.encoder.multi_hop},
                  {"proxy_matching", cfg.encoder.proxy_matching}};
  j["loss"] = {{"kind", loss_kind_name(cfg.train.loss_kind)},
               {"margin", cfg.loss.margin},
               {"scale", cfg.loss.scale},
               {"shift", cfg.loss.shift},
               {"epsilon", cfg.loss.epsilon},
               {"candidates",
                cfg.loss.candidates == CandidatePolicy::kFull     ? "full"
                : cfg.loss.candidates == CandidatePolicy::kInBatch ? "in_batch"
                                                                   : "both_graphs"},
               {"lse_scale", cfg.loss.lse_scale},
               {"tuns_k", cfg.loss.tuns_k}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"epochs", cfg.train.epochs},
                {"rmsprop_decay", cfg.train.rmsprop_decay},
                {"rmsprop_epsilon", cfg.train.rmsprop_epsilon},
                {"eval_every", cfg.train.eval_every},
                {"patience", cfg.train.patience},
                {"dev_fraction", cfg.train.dev_fraction},
                {"threads", cfg.train.threads},
                {"in_batch_threshold", cfg.train.in_batch_threshold},
                {"csls_k", cfg.train.csls_k},
                {"augment", cfg.train.augment},
                {"augment_every", cfg.train.augment_every},
                {"augment_use_csls", cfg.train.augment_use_csls},
                {"augment_warmup_epochs", cfg.train.augment_warmup_epochs}};
  j["eval"] = {{"csls_k", cfg.eval.csls_k},
               {"hits_k", cfg.eval.hits_k},
               {"metric", cfg.eval.metric == SimMetric::kCosine ? "cosine" : "neg_l2"},
               {"candidates_all", cfg.eval.candidates_all},
               {"dump_ranks", cfg.eval.dump_ranks}};
  return j.dump(2);
}

}  // namespace kgalign
