#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "restc/common.hpp"

namespace restc {

// Deterministic RNG wrapper. All draws (bounded ints, uniform reals, shuffles)
// are implemented here on top of mt19937_64 instead of the std distributions,
// whose output is implementation-defined; runs stay bit-reproducible for a
// given seed no matter the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased via rejection.
  int uniform_int(int n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Random permutation of 0..n-1.
  std::vector<int> permutation(int n);

  // Textual state snapshot (exact round-trip, used by checkpoints).
  std::string state() const;
  void set_state(const std::string& s);

  // Derive an independent stream for a named purpose from a base seed.
  static uint64_t salt(uint64_t seed, uint64_t stream_id);

 private:
  std::mt19937_64 gen_;
};

}  // namespace restc
