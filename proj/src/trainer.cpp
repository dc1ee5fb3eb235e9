#include "restc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace restc {

namespace {

// Stream ids for the independent deterministic RNG streams.
constexpr uint64_t kInitStream = 0, kDataStream = 1, kTrainStream = 2, kSplitStream = 3;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Trainer::Trainer(const Dataset& data, const TrainConfig& cfg) : data_(&data), cfg_(cfg) {
  cfg_.validate();
  if (data.train.empty()) throw DataError("trainer: dataset has no training examples");
  dims_.n_items = data.vocab.size();
  dims_.max_len = effective_max_len(data.train, cfg_.max_len_cap);
  dims_.hidden = cfg_.hidden;
  dims_.heads = cfg_.heads;
  dims_.sestrans_layers = cfg_.sestrans_layers;
  dims_.mgat_layers = cfg_.mgat_layers;
  dims_.cfg_layers = cfg_.cfg_layers;

  Rng init_rng(Rng::salt(cfg_.seed, kInitStream));
  model_ = std::make_unique<Model>(dims_, cfg_, init_rng);
  model_->set_propagation(propagation_matrix(data.cfg));
  adam_ = AdamState(model_->params().tensors(), cfg_.lr);
  rng_data_ = Rng(Rng::salt(cfg_.seed, kDataStream));
  rng_train_ = Rng(Rng::salt(cfg_.seed, kTrainStream));
  max_len_ = dims_.max_len;

  // Example-level holdout, drawn once from the seed (independent of the
  // training streams so a resumed run rebuilds the same split).
  std::vector<size_t> order(data.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(Rng::salt(cfg_.seed, kSplitStream));
  split_rng.shuffle(order);
  size_t n_val = static_cast<size_t>(cfg_.val_fraction * static_cast<double>(order.size()));
  if (n_val >= order.size()) n_val = order.size() - 1;
  val_.reserve(n_val);
  fit_.reserve(order.size() - n_val);
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val_ : fit_).push_back(data.train[order[i]]);
  }
  if (fit_.empty()) throw DataError("trainer: validation fraction leaves no fitting examples");
}

Tensor Trainer::refreshed_global(ForwardCtx& ctx) {
  if (cfg_.no_cfg) return {};
  // Every-step refresh keeps the table on the tape; with a sparser refresh the
  // cached table is a constant between recomputes (no gradient into the
  // propagation weights on the in-between steps).
  if (cfg_.cfg_refresh == 1) return model_->global_embedding(ctx);
  if (steps_done_ % cfg_.cfg_refresh == 0 || !cached_global_.defined()) {
    ForwardCtx detached;
    cached_global_ = model_->global_embedding(detached);
  }
  return cached_global_;
}

LossBreakdown Trainer::step_batch(const Batch& batch) {
  Graph tape;
  ForwardCtx ctx;
  ctx.tape = &tape;
  ctx.rng = &rng_train_;
  ctx.training = true;
  Tensor global = refreshed_global(ctx);
  BatchOut out = model_->forward_batch(ctx, batch, global);

  Tensor main_t = prediction_loss(&tape, out.probs, batch.targets, cfg_.main_loss);
  Scalar cont_v = 0;
  Tensor objective = main_t;
  // A single-session batch has no in-batch negatives; the alignment term is
  // skipped for it rather than faked.
  if (cfg_.contrastive_active() && batch.rows >= 2) {
    NegativeSet negs =
        build_negatives(&tape, cfg_.neg_strategy, out.spatial, out.temporal, rng_train_);
    Tensor cont_t = contrastive_loss(&tape, out.spatial, out.temporal, negs, cfg_.tau,
                                     cfg_.include_positive);
    cont_v = cont_t.item();
    objective = add(&tape, main_t, scale(&tape, cont_t, cfg_.eta1));
  }
  const Scalar l2 = model_->params().squared_l2();
  LossBreakdown breakdown = total_loss(main_t.item(), cont_v, l2, cfg_.eta1, cfg_.eta2);
  if (!std::isfinite(breakdown.total))
    throw NumericError("training aborted: non-finite loss (main=" + fmt17(breakdown.main) +
                       ", cont=" + fmt17(breakdown.contrastive) + ")");
  tape.backward(objective);
  adam_.step(cfg_.eta2);
  ++steps_done_;
  return breakdown;
}

EpochLog Trainer::train_epoch(int epoch) {
  const double lr = schedule_lr(cfg_, epoch);
  adam_.set_lr(lr);
  std::vector<Batch> batches =
      make_batches(fit_, cfg_.batch_size, max_len_, dims_.n_items + 1, /*shuffle=*/true,
                   rng_data_.next_u64());
  Scalar main_sum = 0, cont_sum = 0, l2_sum = 0;
  size_t examples = 0;
  for (const Batch& b : batches) {
    LossBreakdown step = step_batch(b);
    main_sum += step.main * b.rows;  // per-batch mean -> example-weighted
    cont_sum += step.contrastive;   // already a batch sum
    l2_sum += step.l2;
    examples += static_cast<size_t>(b.rows);
  }
  EpochLog log;
  log.epoch = epoch + 1;
  log.main_loss = main_sum / static_cast<Scalar>(examples);
  log.cont_loss = cont_sum / static_cast<Scalar>(examples);
  log.l2 = l2_sum / static_cast<Scalar>(batches.size());
  log.total = total_loss(log.main_loss, log.cont_loss, log.l2, cfg_.eta1, cfg_.eta2).total;
  log.lr = lr;
  if (!val_.empty()) {
    MetricReport report = evaluate_validation();
    log.val_hr20 = report.get("hr", 20);
    log.val_mrr20 = report.get("mrr", 20);
  }
  ++epochs_done_;
  return log;
}

MetricReport Trainer::evaluate_validation() {
  std::vector<RankResult> ranks = model_ranks(*model_, val_, cfg_.batch_size);
  return compute_metrics(ranks, {10, 20});
}

TrainResult Trainer::run(const std::string& out_dir) {
  TrainResult result;
  if (!val_.empty()) {
    std::vector<RankResult> pop =
        popularity_ranks(popularity_counts(fit_, dims_.n_items), val_);
    result.pop_val_hr20 = compute_metrics(pop, {10, 20}).get("hr", 20);
  }
  int since_best = 0;
  for (int epoch = epochs_done_; epoch < cfg_.epochs; ++epoch) {
    EpochLog log = train_epoch(epoch);
    result.logs.push_back(log);
    if (val_.empty()) continue;
    if (log.val_mrr20 > result.best_val_mrr20) {
      result.best_val_mrr20 = log.val_mrr20;
      result.best_epoch = log.epoch;
      since_best = 0;
    } else if (cfg_.patience > 0 && ++since_best >= cfg_.patience) {
      result.stopped_early = true;
      break;
    }
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string log_path = out_dir + "/train_log.csv";
    std::ofstream log_out(log_path);
    if (!log_out) throw DataError("cannot write " + log_path);
    log_out << "epoch,main_loss,cont_loss,l2,total,lr,val_hr20,val_mrr20\n";
    for (const EpochLog& l : result.logs) {
      log_out << l.epoch << "," << fmt17(l.main_loss) << "," << fmt17(l.cont_loss) << ","
              << fmt17(l.l2) << "," << fmt17(l.total) << "," << fmt17(l.lr) << ","
              << fmt17(l.val_hr20) << "," << fmt17(l.val_mrr20) << "\n";
    }
    if (!log_out) throw DataError("failed writing " + log_path);
    save(out_dir + "/checkpoint.bin");
    const std::string summary_path = out_dir + "/summary.txt";
    std::ofstream sum_out(summary_path);
    if (!sum_out) throw DataError("cannot write " + summary_path);
    sum_out << "epochs_done=" << epochs_done_ << "\n"
            << "best_epoch=" << result.best_epoch << "\n"
            << "best_val_mrr20=" << fmt17(result.best_val_mrr20) << "\n"
            << "pop_val_hr20=" << fmt17(result.pop_val_hr20) << "\n"
            << "stopped_early=" << (result.stopped_early ? 1 : 0) << "\n";
    if (!sum_out) throw DataError("failed writing " + summary_path);
  }
  return result;
}

uint64_t run_hash(const TrainConfig& cfg, const ModelDims& dims) {
  std::string text;
  for (const auto& [k, v] : cfg.to_map()) text += k + "=" + v + "\n";
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= dims.hash();
  h *= 1099511628211ull;
  return h;
}

uint64_t Trainer::config_hash() const { return run_hash(cfg_, dims_); }

void Trainer::save(const std::string& path) {
  CheckpointMeta meta;
  meta.dims = dims_;
  meta.config_hash = config_hash();
  meta.epoch = epochs_done_;
  meta.adam_step = adam_.step_count();
  meta.lr = adam_.lr();
  meta.data_rng_state = rng_data_.state();
  meta.train_rng_state = rng_train_.state();
  save_checkpoint(path, model_->params(), &adam_, meta);
}

void Trainer::resume(const std::string& path) {
  LoadedCheckpoint loaded = load_checkpoint(path, config_hash());
  if (loaded.meta.dims.hash() != dims_.hash())
    throw UsageError("checkpoint " + path + " was trained with different model dimensions");
  // Overwrite the live parameter values in place (the optimizer and model
  // share these tensors).
  std::vector<NamedParam> have = model_->params().named();
  std::vector<NamedParam> want = loaded.params.named();
  for (size_t i = 0; i < have.size(); ++i)
    std::copy(want[i].tensor.values().begin(), want[i].tensor.values().end(),
              have[i].tensor.values().begin());
  if (loaded.has_adam) {
    for (size_t i = 0; i < adam_.param_count(); ++i) {
      adam_.moment1(i) = loaded.adam_m[i];
      adam_.moment2(i) = loaded.adam_v[i];
    }
  }
  adam_.set_step_count(loaded.meta.adam_step);
  adam_.set_lr(loaded.meta.lr);
  rng_data_.set_state(loaded.meta.data_rng_state);
  rng_train_.set_state(loaded.meta.train_rng_state);
  epochs_done_ = loaded.meta.epoch;
  steps_done_ = loaded.meta.adam_step;
  cached_global_ = Tensor();
}

}  // namespace restc
