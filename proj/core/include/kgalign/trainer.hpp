#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kgalign/augment.hpp"
#include "kgalign/grad.hpp"
#include "kgalign/optimizer.hpp"

namespace kgalign {

struct TrainConfig {
  double learning_rate = 0.005;
  Index batch_size = 1024;
  Index epochs = 100;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  Index eval_every = 5;      // epochs between dev evaluations
  Index patience = 5;        // non-improving evaluations before stopping
  double dev_fraction = 0.1; // training seeds held out for early stopping
  std::uint64_t rng_seed = 0;
  int threads = 1;
  Index in_batch_threshold = 20000;  // switch to in-batch candidates above this
  LossKind loss_kind = LossKind::kNhsm;
  Index csls_k = 10;

  // Semi-supervised augmentation: propose mutual-nearest pseudo pairs every
  // augment_every dev evaluations and train on them from then on. Proposals
  // before augment_warmup_epochs are skipped; accepting pairs from a barely
  // trained model poisons the never-revoked pool.
  bool augment = false;
  Index augment_every = 1;
  bool augment_use_csls = true;
  Index augment_warmup_epochs = 30;

  void validate() const;
};

struct EpochRecord {
  Index epoch = 0;
  double loss = 0.0;                 // mean loss per pair over the epoch
  std::optional<double> dev_hits1;   // present on evaluation epochs
  double elapsed_seconds = 0.0;      // cumulative since training started
};

struct TrainResult {
  ParameterSet params;  // best dev checkpoint (final params when no dev set)
  std::vector<EpochRecord> history;
  PseudoPairPool pool;
  bool aborted = false;
  std::string abort_reason;
  Index best_epoch = -1;
  double best_dev_hits1 = -1.0;
  Index epochs_run = 0;
};

// The full optimization loop: per epoch, shuffle training seeds, run batches
// of forward (dropout on) + loss + gradients + RMSprop, evaluate dev Hits@1
// (CSLS over cosine) every eval_every epochs keeping the best checkpoint, and
// stop after `patience` non-improving evaluations. A non-finite loss or
// gradient aborts with the last good checkpoint.
TrainResult train(const GraphPair& pair, const EncoderConfig& encoder_cfg,
                  const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  const ParameterSet* warm_start = nullptr);

// train() with augmentation enabled.
TrainResult semi_supervised_train(const GraphPair& pair, const EncoderConfig& encoder_cfg,
                                  const LossConfig& loss_cfg, const TrainConfig& train_cfg);

std::string history_to_jsonl(const std::vector<EpochRecord>& history);

}  // namespace kgalign
