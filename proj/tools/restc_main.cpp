// Command-line surface: preprocess | train | evaluate | sweep |
// export-embeddings. Config precedence is defaults < --config file < flags;
// the resolved config is persisted next to every run's outputs.
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "restc/checkpoint.hpp"
#include "restc/data.hpp"
#include "restc/eval.hpp"
#include "restc/trainer.hpp"

namespace {

using namespace restc;

std::string dashed(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

// Binds every TrainConfig key as a CLI flag and remembers which were set.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> bound;
  std::map<std::string, std::string> flag_values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file (defaults < file < flags)");
    static const std::pair<const char*, const char*> kValueKeys[] = {
        {"epochs", "training epochs"},
        {"batch_size", "sessions per optimizer step"},
        {"hidden", "embedding width D"},
        {"max_len_cap", "longest prefix kept"},
        {"lr", "base learning rate"},
        {"eta1", "contrastive loss weight"},
        {"eta2", "L2 penalty weight"},
        {"tau", "contrastive temperature"},
        {"dropout", "dropout probability"},
        {"leaky_slope", "negative slope of leaky relu"},
        {"heads", "self-attention heads"},
        {"sestrans_layers", "sequence encoder layers"},
        {"mgat_layers", "session-graph attention layers"},
        {"cfg_layers", "co-occurrence graph hops"},
        {"scheduler", "lr schedule: step|cosine"},
        {"lr_step", "epochs per lr decay step"},
        {"lr_gamma", "lr decay factor"},
        {"t_max", "cosine schedule period"},
        {"lr_min", "cosine schedule floor"},
        {"seed", "run seed"},
        {"neg_strategy",
         "negatives: spatial_only|single_align|multi_align|self_multi_align|mixed_noise"},
        {"main_loss", "per_item|categorical"},
        {"cfg_refresh", "steps between global-table recomputes"},
        {"patience", "early-stopping patience (0 = off)"},
        {"val_fraction", "validation holdout fraction"},
        {"test_window_days", "days of trailing data held out as test"},
        {"min_item_freq", "minimum item occurrences kept"},
    };
    for (const auto& [key, desc] : kValueKeys) {
      CLI::Option* opt = cmd->add_option("--" + dashed(key), values[key], desc);
      bound.emplace_back(key, opt);
    }
    static const std::pair<const char*, const char*> kFlagKeys[] = {
        {"include_positive", "count the positive pair in the contrastive denominator"},
        {"no_sestrans", "ablate the sequence encoder"},
        {"no_cfg", "ablate the global co-occurrence enhancement"},
        {"no_cont", "ablate the contrastive objective"},
        {"no_pe_g", "zero the graph-side position table"},
        {"no_pe_s", "zero the sequence-side position table"},
    };
    for (const auto& [key, desc] : kFlagKeys) {
      std::string k = key;
      cmd->add_flag_callback(
          "--" + dashed(k), [this, k] { flag_values[k] = "1"; }, desc);
    }
  }

  std::map<std::string, std::string> overrides() const {
    std::map<std::string, std::string> kv = flag_values;
    for (const auto& [key, opt] : bound)
      if (opt->count() > 0) kv[key] = values.at(key);
    return kv;
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) cfg.apply(parse_config_file(config_path));
    cfg.apply(overrides());
    cfg.validate();
    return cfg;
  }
};

void persist_config(const std::string& dir, const TrainConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_config_file(dir + "/config.resolved", cfg.to_map());
}

void print_report(const std::string& title, const MetricReport& report,
                  const std::vector<int>& cutoffs) {
  std::printf("%s\n", title.c_str());
  const std::vector<std::string> groups = {"all", "S", "M", "L"};
  std::printf("%-9s", "");
  for (const std::string& g : groups) {
    size_t count = 0;
    for (const MetricReport::Row& r : report.rows)
      if (r.group == g) {
        count = r.count;
        break;
      }
    std::printf("%7s(n=%zu)", g.c_str(), count);
  }
  std::printf("\n");
  for (int k : cutoffs) {
    for (const char* metric : {"hr", "mrr"}) {
      std::printf("%s@%-6d", metric, k);
      for (const std::string& g : groups) std::printf("%14.4f", report.get(metric, k, g));
      std::printf("\n");
    }
  }
}

struct EvalSetup {
  Dataset data;
  TrainConfig cfg;
  ModelDims dims;
  std::unique_ptr<Model> model;
};

// Shared by evaluate and export-embeddings: dataset + checkpoint -> live model.
EvalSetup load_for_eval(const std::string& data_dir, const std::string& ckpt_path,
                        const ConfigFlags& flags) {
  EvalSetup s;
  s.data = load_dataset_dir(data_dir);
  s.cfg = flags.resolve();
  LoadedCheckpoint loaded = load_checkpoint(ckpt_path);
  if (loaded.meta.config_hash != run_hash(s.cfg, loaded.meta.dims))
    throw UsageError("checkpoint " + ckpt_path +
                     " was trained under a different configuration; pass the config.resolved "
                     "file written by that run via --config");
  if (loaded.meta.dims.n_items != s.data.vocab.size())
    throw DataError("checkpoint item count (" + std::to_string(loaded.meta.dims.n_items) +
                    ") does not match dataset vocabulary (" +
                    std::to_string(s.data.vocab.size()) + ")");
  s.dims = loaded.meta.dims;
  s.model = std::make_unique<Model>(s.dims, s.cfg, std::move(loaded.params));
  if (!s.cfg.no_cfg) s.model->set_propagation(propagation_matrix(s.data.cfg));
  return s;
}

int cmd_preprocess(const std::string& input, const std::string& out, const ConfigFlags& flags) {
  TrainConfig cfg = flags.resolve();
  ParseResult parsed = parse_sessions(input);
  if (parsed.malformed > 0)
    std::fprintf(stderr, "warning: skipped %zu malformed line(s)\n", parsed.malformed);
  SplitResult split = filter_and_split(parsed.events, cfg.test_window_days, cfg.min_item_freq);
  write_dataset_dir(out, split);
  persist_config(out, cfg);
  DatasetStats stats = compute_stats(split, augment_all(split.train_sessions),
                                     augment_all(split.test_sessions));
  std::printf("wrote %s\n", out.c_str());
  std::printf("items     %d\n", stats.items);
  std::printf("clicks    %lld\n", static_cast<long long>(stats.clicks));
  std::printf("train     %zu\n", stats.train_examples);
  std::printf("test      %zu\n", stats.test_examples);
  std::printf("avg.len   %.6f\n", stats.avg_len);
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out, const ConfigFlags& flags) {
  TrainConfig cfg = flags.resolve();
  Dataset data = load_dataset_dir(data_dir);
  persist_config(out, cfg);
  Trainer trainer(data, cfg);
  std::printf("training on %zu examples (%zu held out), %d items\n",
              trainer.fit_examples().size(), trainer.val_examples().size(), data.vocab.size());
  TrainResult result = trainer.run(out);
  for (const EpochLog& l : result.logs)
    std::printf("epoch %3d  main %.5f  cont %.5f  total %.5f  lr %.5g  val_hr20 %.4f  "
                "val_mrr20 %.4f\n",
                l.epoch, l.main_loss, l.cont_loss, l.total, l.lr, l.val_hr20, l.val_mrr20);
  if (result.stopped_early) std::printf("stopped early (no improvement)\n");
  std::printf("best epoch %d  val_mrr20 %.4f  (popularity baseline hr20 %.4f)\n",
              result.best_epoch, result.best_val_mrr20, result.pop_val_hr20);
  std::printf("wrote %s/train_log.csv and %s/checkpoint.bin\n", out.c_str(), out.c_str());
  return 0;
}

int cmd_evaluate(const std::string& data_dir, const std::string& ckpt, const std::string& out,
                 std::vector<int> cutoffs, int eval_batch, const ConfigFlags& flags) {
  EvalSetup s = load_for_eval(data_dir, ckpt, flags);
  if (s.data.test.empty()) throw DataError("dataset has no test examples");
  const int batch = eval_batch > 0 ? eval_batch : s.cfg.batch_size;
  std::vector<RankResult> ranks = model_ranks(*s.model, s.data.test, batch);
  MetricReport model_report = compute_metrics(ranks, cutoffs);
  std::vector<RankResult> pop =
      popularity_ranks(popularity_counts(s.data.train, s.dims.n_items), s.data.test);
  MetricReport pop_report = compute_metrics(pop, cutoffs);
  print_report("model", model_report, cutoffs);
  print_report("popularity baseline", pop_report, cutoffs);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_metric_csv(out + "/metrics.csv", {&model_report, &pop_report}, {"model_", "pop_"});
    persist_config(out, s.cfg);
    std::printf("wrote %s/metrics.csv\n", out.c_str());
  }
  return 0;
}

int cmd_export(const std::string& data_dir, const std::string& ckpt, const std::string& out,
               const std::string& split, size_t limit, int eval_batch, const ConfigFlags& flags) {
  EvalSetup s = load_for_eval(data_dir, ckpt, flags);
  const std::vector<AugmentedExample>* examples = nullptr;
  if (split == "test") examples = &s.data.test;
  else if (split == "train") examples = &s.data.train;
  else throw UsageError("--split must be train or test");
  std::vector<AugmentedExample> subset = *examples;
  if (limit > 0 && subset.size() > limit) subset.resize(limit);
  if (subset.empty()) throw DataError("no examples to export from split '" + split + "'");
  const int batch = eval_batch > 0 ? eval_batch : s.cfg.batch_size;
  export_embeddings(*s.model, subset, batch, out);
  std::printf("wrote %zu embedding row(s) to %s\n", subset.size(), out.c_str());
  return 0;
}

using GridAxis = std::pair<std::string, std::vector<std::string>>;

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t end = spec.find(';', pos);
    if (end == std::string::npos) end = spec.size();
    std::string part = spec.substr(pos, end - pos);
    pos = end + 1;
    if (part.empty()) continue;
    size_t eq = part.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("grid: expected key=v1,v2,... in '" + part + "'");
    GridAxis axis;
    axis.first = part.substr(0, eq);
    size_t vpos = eq + 1;
    while (vpos <= part.size()) {
      size_t vend = part.find(',', vpos);
      if (vend == std::string::npos) vend = part.size();
      std::string v = part.substr(vpos, vend - vpos);
      if (v.empty()) throw UsageError("grid: empty value for key '" + axis.first + "'");
      axis.second.push_back(v);
      vpos = vend + 1;
      if (vend == part.size()) break;
    }
    if (axis.second.empty()) throw UsageError("grid: no values for key '" + axis.first + "'");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw UsageError("grid: empty specification");
  return axes;
}

int cmd_sweep(const std::string& data_dir, const std::string& out, const std::string& grid_spec,
              int workers, const ConfigFlags& flags) {
  if (workers < 1) throw UsageError("--workers must be >= 1");
  Dataset data = load_dataset_dir(data_dir);
  std::vector<GridAxis> axes = parse_grid(grid_spec);
  size_t total = 1;
  for (const GridAxis& a : axes) total *= a.second.size();

  struct RunRow {
    std::map<std::string, std::string> combo;
    TrainResult result;
    double final_hr20 = 0, final_mrr20 = 0;
  };
  std::vector<RunRow> rows(total);
  std::vector<TrainConfig> configs(total);
  for (size_t idx = 0; idx < total; ++idx) {
    std::map<std::string, std::string> combo;
    size_t rest = idx;
    for (size_t a = axes.size(); a-- > 0;) {  // last axis varies fastest
      combo[axes[a].first] = axes[a].second[rest % axes[a].second.size()];
      rest /= axes[a].second.size();
    }
    TrainConfig cfg;
    if (!flags.config_path.empty()) cfg.apply(parse_config_file(flags.config_path));
    cfg.apply(flags.overrides());
    cfg.apply(combo);  // the sweep axis wins
    cfg.validate();
    rows[idx].combo = std::move(combo);
    configs[idx] = cfg;
  }

  std::filesystem::create_directories(out);
  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      try {
        char name[32];
        std::snprintf(name, sizeof(name), "run_%03zu", idx);
        const std::string run_dir = out + "/" + name;
        persist_config(run_dir, configs[idx]);
        Trainer trainer(data, configs[idx]);
        rows[idx].result = trainer.run(run_dir);
        if (!rows[idx].result.logs.empty()) {
          const EpochLog& last = rows[idx].result.logs.back();
          rows[idx].final_hr20 = last.val_hr20;
          rows[idx].final_mrr20 = last.val_mrr20;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  const std::string csv_path = out + "/results.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path);
  csv << "run";
  for (const GridAxis& a : axes) csv << "," << a.first;
  csv << ",seed,epochs,final_val_hr20,final_val_mrr20,best_epoch,best_val_mrr20,pop_val_hr20\n";
  char buf[64];
  for (size_t idx = 0; idx < total; ++idx) {
    csv << idx;
    for (const GridAxis& a : axes) csv << "," << rows[idx].combo.at(a.first);
    csv << "," << configs[idx].seed << "," << rows[idx].result.logs.size();
    for (double v : {rows[idx].final_hr20, rows[idx].final_mrr20}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      csv << "," << buf;
    }
    csv << "," << rows[idx].result.best_epoch;
    for (double v : {rows[idx].result.best_val_mrr20, rows[idx].result.pop_val_hr20}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      csv << "," << buf;
    }
    csv << "\n";
    std::printf("run_%03zu:", idx);
    for (const GridAxis& a : axes)
      std::printf(" %s=%s", a.first.c_str(), rows[idx].combo.at(a.first).c_str());
    std::printf("  final_val_hr20 %.4f  final_val_mrr20 %.4f\n", rows[idx].final_hr20,
                rows[idx].final_mrr20);
  }
  if (!csv) throw DataError("failed writing " + csv_path);
  std::printf("wrote %s\n", csv_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"session-based recommender with dual sequence/graph encoders"};
  app.require_subcommand(1);

  std::string input, data_dir, out, ckpt, grid_spec;
  std::string split = "test";
  std::vector<int> cutoffs = {10, 20};
  int eval_batch = 0, workers = 1;
  size_t limit = 0;

  CLI::App* pre = app.add_subcommand("preprocess", "raw click CSV -> dataset directory");
  pre->add_option("--input", input, "CSV of session_id,item_id,timestamp")->required();
  pre->add_option("--out", out, "output dataset directory")->required();
  ConfigFlags pre_flags;
  pre_flags.attach(pre);

  CLI::App* train = app.add_subcommand("train", "fit a model on a dataset directory");
  train->add_option("--data", data_dir, "preprocessed dataset directory")->required();
  train->add_option("--out", out, "run output directory")->required();
  ConfigFlags train_flags;
  train_flags.attach(train);

  CLI::App* eval = app.add_subcommand("evaluate", "rank the test split under a checkpoint");
  eval->add_option("--data", data_dir, "preprocessed dataset directory")->required();
  eval->add_option("--checkpoint", ckpt, "checkpoint.bin from a training run")->required();
  eval->add_option("--out", out, "directory for metrics.csv (optional)");
  eval->add_option("--cutoffs", cutoffs, "ranking cutoffs")->delimiter(',');
  eval->add_option("--eval-batch", eval_batch, "forward batch size (0 = config batch_size)");
  ConfigFlags eval_flags;
  eval_flags.attach(eval);

  CLI::App* sweep = app.add_subcommand("sweep", "grid of training runs");
  sweep->add_option("--data", data_dir, "preprocessed dataset directory")->required();
  sweep->add_option("--out", out, "sweep output directory")->required();
  sweep->add_option("--grid", grid_spec, "semicolon-separated key=v1,v2,... axes")->required();
  sweep->add_option("--workers", workers, "parallel runs (default 1 = sequential)");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep);

  CLI::App* exp = app.add_subcommand("export-embeddings", "fused session vectors as CSV");
  exp->add_option("--data", data_dir, "preprocessed dataset directory")->required();
  exp->add_option("--checkpoint", ckpt, "checkpoint.bin from a training run")->required();
  exp->add_option("--out", out, "output CSV path")->required();
  exp->add_option("--split", split, "train or test (default test)");
  exp->add_option("--limit", limit, "export only the first K examples (0 = all)");
  exp->add_option("--eval-batch", eval_batch, "forward batch size (0 = config batch_size)");
  ConfigFlags exp_flags;
  exp_flags.attach(exp);

  try {
    app.parse(argc, argv);
    if (pre->parsed()) return cmd_preprocess(input, out, pre_flags);
    if (train->parsed()) return cmd_train(data_dir, out, train_flags);
    if (eval->parsed()) return cmd_evaluate(data_dir, ckpt, out, cutoffs, eval_batch, eval_flags);
    if (sweep->parsed()) return cmd_sweep(data_dir, out, grid_spec, workers, sweep_flags);
    if (exp->parsed()) return cmd_export(data_dir, ckpt, out, split, limit, eval_batch, exp_flags);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const restc::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const restc::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const restc::Error& e) {  // data + shape contract errors
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
