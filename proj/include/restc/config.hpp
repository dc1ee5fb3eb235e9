#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "restc/common.hpp"

namespace restc {

enum class SchedulerKind { StepLr, Cosine };
enum class NegStrategy { SpatialOnly, SingleAlign, MultiAlign, SelfMultiAlign, MixedNoise };
enum class MainLossKind { PerItem, Categorical };  // per-item binary-style CE vs plain CE

std::string to_string(SchedulerKind k);
std::string to_string(NegStrategy s);
std::string to_string(MainLossKind k);
SchedulerKind scheduler_from_string(const std::string& s);
NegStrategy strategy_from_string(const std::string& s);
MainLossKind main_loss_from_string(const std::string& s);

// Everything a training run needs; defaults match the reference setting at
// desk scale. Precedence when resolving: defaults < config file < CLI flags.
struct TrainConfig {
  int epochs = 30;
  int batch_size = 512;
  int hidden = 64;       // D
  int max_len_cap = 50;  // L cap
  double lr = 0.001;
  double eta1 = 0.005;  // contrastive weight
  double eta2 = 1e-5;   // L2 weight
  double tau = 0.5;     // contrastive temperature
  double dropout = 0.1;
  double leaky_slope = 0.01;
  int heads = 2;
  int sestrans_layers = 2;
  int mgat_layers = 1;
  int cfg_layers = 3;
  SchedulerKind scheduler = SchedulerKind::StepLr;
  int lr_step = 3;
  double lr_gamma = 0.1;
  int t_max = 30;
  double lr_min = 0.0;
  uint64_t seed = 42;
  NegStrategy neg_strategy = NegStrategy::MixedNoise;
  bool include_positive = false;  // standard-InfoNCE denominator
  MainLossKind main_loss = MainLossKind::PerItem;
  bool no_sestrans = false;
  bool no_cfg = false;
  bool no_cont = false;
  bool no_pe_g = false;  // zero the graph-side position table
  bool no_pe_s = false;  // zero the sequence-side position table
  int cfg_refresh = 1;   // recompute the global-graph embedding every k steps
  int patience = 5;      // early stopping on validation MRR@20
  double val_fraction = 0.2;
  int test_window_days = 7;
  int min_item_freq = 5;

  // Raises UsageError on out-of-range values.
  void validate() const;
  // Whether the contrastive path runs at all.
  bool contrastive_active() const { return !no_cont && !no_sestrans && eta1 > 0.0; }

  std::map<std::string, std::string> to_map() const;
  void apply(const std::map<std::string, std::string>& kv);  // unknown key -> UsageError
};

// key=value lines, '#' comments, blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);
void write_config_file(const std::string& path, const std::map<std::string, std::string>& kv);

// Per-epoch learning rate (epoch is 0-based).
double schedule_lr(const TrainConfig& cfg, int epoch);

}  // namespace restc
