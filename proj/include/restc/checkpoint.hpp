#pragma once

#include <cstdint>
#include <string>

#include "restc/adam.hpp"
#include "restc/params.hpp"

namespace restc {

// Versioned binary container: magic "RSTC1", then length-prefixed named
// tensor records (u32 name length, name bytes, u32 rank, u64 dims, f64 data,
// all little-endian). Optimizer moments, RNG streams and run metadata ride
// along as meta.* records so a resumed run continues bit-identically.
struct CheckpointMeta {
  ModelDims dims;
  uint64_t config_hash = 0;
  int epoch = 0;  // epochs completed
  int64_t adam_step = 0;
  double lr = 0.0;
  std::string data_rng_state;
  std::string train_rng_state;
};

void save_checkpoint(const std::string& path, const ModelParams& params, AdamState* adam,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ModelParams params;
  CheckpointMeta meta;
  bool has_adam = false;
  std::vector<std::vector<Scalar>> adam_m, adam_v;
};

// Raises DataError on bad magic/format, UsageError when expected_hash is
// nonzero and does not match the stored config hash.
LoadedCheckpoint load_checkpoint(const std::string& path, uint64_t expected_hash = 0);

}  // namespace restc
