#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "restc/tensor.hpp"

namespace restc::testsupport {

struct GradReport {
  double max_rel = 0;
  std::string worst;  // description of the worst-offending entry
  int checked = 0;
  bool ok(double tol) const { return checked > 0 && max_rel < tol; }
};

// |a-b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-6);

// Central-difference check of analytic gradients. `build` runs one forward on
// the given tape (nullptr = plain values) and returns the scalar loss tensor;
// it must be deterministic given current parameter values. `eval_fd`, when
// set, overrides the finite-difference evaluation (used when the objective has
// terms that never go on the tape); `analytic_extra(t, i)` is added to the
// tape gradient of entry i of parameter t for the same reason. Checks
// min(samples_per_param, size) entries per parameter, drawn from `seed`.
GradReport check_grads(const std::function<Tensor(Graph*)>& build,
                       const std::vector<std::pair<std::string, Tensor>>& params,
                       int samples_per_param, uint64_t seed, double h = 1e-5,
                       const std::function<double()>& eval_fd = {},
                       const std::function<double(const Tensor&, size_t)>& analytic_extra = {});

}  // namespace restc::testsupport
