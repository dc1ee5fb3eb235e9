#include "restc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace restc {

std::string to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::StepLr: return "step";
    case SchedulerKind::Cosine: return "cosine";
  }
  throw UsageError("unknown scheduler kind");
}

std::string to_string(NegStrategy s) {
  switch (s) {
    case NegStrategy::SpatialOnly: return "spatial_only";
    case NegStrategy::SingleAlign: return "single_align";
    case NegStrategy::MultiAlign: return "multi_align";
    case NegStrategy::SelfMultiAlign: return "self_multi_align";
    case NegStrategy::MixedNoise: return "mixed_noise";
  }
  throw UsageError("unknown negative strategy");
}

std::string to_string(MainLossKind k) {
  switch (k) {
    case MainLossKind::PerItem: return "per_item";
    case MainLossKind::Categorical: return "categorical";
  }
  throw UsageError("unknown main loss kind");
}

SchedulerKind scheduler_from_string(const std::string& s) {
  if (s == "step") return SchedulerKind::StepLr;
  if (s == "cosine") return SchedulerKind::Cosine;
  throw UsageError("unknown scheduler '" + s + "' (step|cosine)");
}

NegStrategy strategy_from_string(const std::string& s) {
  if (s == "spatial_only") return NegStrategy::SpatialOnly;
  if (s == "single_align") return NegStrategy::SingleAlign;
  if (s == "multi_align") return NegStrategy::MultiAlign;
  if (s == "self_multi_align") return NegStrategy::SelfMultiAlign;
  if (s == "mixed_noise") return NegStrategy::MixedNoise;
  throw UsageError("unknown negative strategy '" + s +
                   "' (spatial_only|single_align|multi_align|self_multi_align|mixed_noise)");
}

MainLossKind main_loss_from_string(const std::string& s) {
  if (s == "per_item") return MainLossKind::PerItem;
  if (s == "categorical") return MainLossKind::Categorical;
  throw UsageError("unknown main loss '" + s + "' (per_item|categorical)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("config: " + msg); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (max_len_cap < 1) fail("max_len_cap must be >= 1");
  if (!(lr > 0)) fail("lr must be positive");
  if (eta1 < 0 || eta1 > 0.1) fail("eta1 must lie in [0, 0.1]");
  if (eta2 < 0) fail("eta2 must be non-negative");
  if (!(tau > 0)) fail("tau must be positive");
  if (dropout < 0 || dropout >= 1) fail("dropout must lie in [0, 1)");
  if (leaky_slope <= 0 || leaky_slope >= 1) fail("leaky_slope must lie in (0, 1)");
  if (heads < 1) fail("heads must be >= 1");
  if ((2 * hidden) % heads != 0) fail("heads must divide 2*hidden");
  if (sestrans_layers < 1 || sestrans_layers > 6) fail("sestrans_layers must lie in [1, 6]");
  if (mgat_layers < 1 || mgat_layers > 4) fail("mgat_layers must lie in [1, 4]");
  if (cfg_layers < 1 || cfg_layers > 4) fail("cfg_layers must lie in [1, 4]");
  if (lr_step < 1) fail("lr_step must be >= 1");
  if (lr_gamma <= 0 || lr_gamma > 1) fail("lr_gamma must lie in (0, 1]");
  if (t_max < 1) fail("t_max must be >= 1");
  if (lr_min < 0 || lr_min > lr) fail("lr_min must lie in [0, lr]");
  if (cfg_refresh < 1) fail("cfg_refresh must be >= 1");
  if (patience < 0) fail("patience must be >= 0");
  if (val_fraction < 0 || val_fraction >= 1) fail("val_fraction must lie in [0, 1)");
  if (test_window_days < 1) fail("test_window_days must be >= 1");
  if (min_item_freq < 1) fail("min_item_freq must be >= 1");
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config: bad value '" + v + "' for " + key);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config: bad value '" + v + "' for " + key);
  return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw UsageError("config: bad value '" + v + "' for " + key);
}

}  // namespace

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["epochs"] = std::to_string(epochs);
  kv["batch_size"] = std::to_string(batch_size);
  kv["hidden"] = std::to_string(hidden);
  kv["max_len_cap"] = std::to_string(max_len_cap);
  kv["lr"] = fmt_double(lr);
  kv["eta1"] = fmt_double(eta1);
  kv["eta2"] = fmt_double(eta2);
  kv["tau"] = fmt_double(tau);
  kv["dropout"] = fmt_double(dropout);
  kv["leaky_slope"] = fmt_double(leaky_slope);
  kv["heads"] = std::to_string(heads);
  kv["sestrans_layers"] = std::to_string(sestrans_layers);
  kv["mgat_layers"] = std::to_string(mgat_layers);
  kv["cfg_layers"] = std::to_string(cfg_layers);
  kv["scheduler"] = to_string(scheduler);
  kv["lr_step"] = std::to_string(lr_step);
  kv["lr_gamma"] = fmt_double(lr_gamma);
  kv["t_max"] = std::to_string(t_max);
  kv["lr_min"] = fmt_double(lr_min);
  kv["seed"] = std::to_string(seed);
  kv["neg_strategy"] = to_string(neg_strategy);
  kv["include_positive"] = include_positive ? "1" : "0";
  kv["main_loss"] = to_string(main_loss);
  kv["no_sestrans"] = no_sestrans ? "1" : "0";
  kv["no_cfg"] = no_cfg ? "1" : "0";
  kv["no_cont"] = no_cont ? "1" : "0";
  kv["no_pe_g"] = no_pe_g ? "1" : "0";
  kv["no_pe_s"] = no_pe_s ? "1" : "0";
  kv["cfg_refresh"] = std::to_string(cfg_refresh);
  kv["patience"] = std::to_string(patience);
  kv["val_fraction"] = fmt_double(val_fraction);
  kv["test_window_days"] = std::to_string(test_window_days);
  kv["min_item_freq"] = std::to_string(min_item_freq);
  return kv;
}

void TrainConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, v] : kv) {
    if (key == "epochs") epochs = parse_int(key, v);
    else if (key == "batch_size") batch_size = parse_int(key, v);
    else if (key == "hidden") hidden = parse_int(key, v);
    else if (key == "max_len_cap") max_len_cap = parse_int(key, v);
    else if (key == "lr") lr = parse_double(key, v);
    else if (key == "eta1") eta1 = parse_double(key, v);
    else if (key == "eta2") eta2 = parse_double(key, v);
    else if (key == "tau") tau = parse_double(key, v);
    else if (key == "dropout") dropout = parse_double(key, v);
    else if (key == "leaky_slope") leaky_slope = parse_double(key, v);
    else if (key == "heads") heads = parse_int(key, v);
    else if (key == "sestrans_layers") sestrans_layers = parse_int(key, v);
    else if (key == "mgat_layers") mgat_layers = parse_int(key, v);
    else if (key == "cfg_layers") cfg_layers = parse_int(key, v);
    else if (key == "scheduler") scheduler = scheduler_from_string(v);
    else if (key == "lr_step") lr_step = parse_int(key, v);
    else if (key == "lr_gamma") lr_gamma = parse_double(key, v);
    else if (key == "t_max") t_max = parse_int(key, v);
    else if (key == "lr_min") lr_min = parse_double(key, v);
    else if (key == "seed") seed = parse_u64(key, v);
    else if (key == "neg_strategy") neg_strategy = strategy_from_string(v);
    else if (key == "include_positive") include_positive = parse_bool(key, v);
    else if (key == "main_loss") main_loss = main_loss_from_string(v);
    else if (key == "no_sestrans") no_sestrans = parse_bool(key, v);
    else if (key == "no_cfg") no_cfg = parse_bool(key, v);
    else if (key == "no_cont") no_cont = parse_bool(key, v);
    else if (key == "no_pe_g") no_pe_g = parse_bool(key, v);
    else if (key == "no_pe_s") no_pe_s = parse_bool(key, v);
    else if (key == "cfg_refresh") cfg_refresh = parse_int(key, v);
    else if (key == "patience") patience = parse_int(key, v);
    else if (key == "val_fraction") val_fraction = parse_double(key, v);
    else if (key == "test_window_days") test_window_days = parse_int(key, v);
    else if (key == "min_item_freq") min_item_freq = parse_int(key, v);
    else throw UsageError("config: unknown key '" + key + "'");
  }
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    if (line[begin] == '#') continue;
    size_t eq = line.find('=', begin);
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(begin, eq - begin));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

void write_config_file(const std::string& path, const std::map<std::string, std::string>& kv) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write config file " + path);
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  if (!out) throw UsageError("failed writing config file " + path);
}

double schedule_lr(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw UsageError("schedule_lr: epoch must be non-negative");
  switch (cfg.scheduler) {
    case SchedulerKind::StepLr:
      return cfg.lr * std::pow(cfg.lr_gamma, epoch / cfg.lr_step);
    case SchedulerKind::Cosine: {
      const double t = std::min(epoch, cfg.t_max);
      return cfg.lr_min +
             0.5 * (cfg.lr - cfg.lr_min) * (1.0 + std::cos(M_PI * t / cfg.t_max));
    }
  }
  throw UsageError("schedule_lr: unknown scheduler");
}

}  // namespace restc
