#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restc/adam.hpp"
#include "restc/checkpoint.hpp"
#include "restc/config.hpp"
#include "restc/data.hpp"
#include "restc/eval.hpp"
#include "restc/model.hpp"
#include "restc/objectives.hpp"

namespace restc {

// Fingerprint of a run's resolved configuration plus model dimensions; stored
// in checkpoints so evaluate/resume can refuse a mismatched setup.
uint64_t run_hash(const TrainConfig& cfg, const ModelDims& dims);

struct EpochLog {
  int epoch = 0;  // 1-based in logs
  Scalar main_loss = 0, cont_loss = 0, l2 = 0, total = 0;
  double lr = 0;
  double val_hr20 = 0, val_mrr20 = 0;
};

struct TrainResult {
  std::vector<EpochLog> logs;
  int best_epoch = 0;  // 1-based epoch with the best validation mrr@20
  double best_val_mrr20 = 0;
  double pop_val_hr20 = 0;  // popularity baseline on the validation split
  bool stopped_early = false;
};

// Joint training loop: batches of sessions through both encoders, the
// contrastive term over the batch views, the propagated global table refreshed
// per step, one Adam update per batch, per-epoch validation with early
// stopping. Deterministic for a given config seed.
class Trainer {
 public:
  Trainer(const Dataset& data, const TrainConfig& cfg);

  // Runs up to cfg.epochs epochs; writes train_log.csv, checkpoint.bin and
  // summary.txt into out_dir when non-empty.
  TrainResult run(const std::string& out_dir);

  // One optimizer step on one batch; exposed for tests.
  LossBreakdown step_batch(const Batch& batch);
  // One full epoch (0-based), returns its log row.
  EpochLog train_epoch(int epoch);

  MetricReport evaluate_validation();
  Model& model() { return *model_; }
  const std::vector<AugmentedExample>& fit_examples() const { return fit_; }
  const std::vector<AugmentedExample>& val_examples() const { return val_; }

  void save(const std::string& path);
  // Restores parameters, optimizer moments, RNG streams and epoch counter.
  void resume(const std::string& path);
  int epochs_done() const { return epochs_done_; }
  uint64_t config_hash() const;

 private:
  Tensor refreshed_global(ForwardCtx& ctx);

  const Dataset* data_;
  TrainConfig cfg_;
  ModelDims dims_;
  std::unique_ptr<Model> model_;
  AdamState adam_;
  Rng rng_data_{0}, rng_train_{0};
  std::vector<AugmentedExample> fit_, val_;
  int max_len_ = 1;
  int epochs_done_ = 0;
  int64_t steps_done_ = 0;
  Tensor cached_global_;  // detached snapshot used between refreshes
};

}  // namespace restc
