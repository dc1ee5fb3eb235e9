#pragma once

#include <cstdint>
#include <vector>

#include "restc/tensor.hpp"

namespace restc {

// Adam with bias correction. The L2 term of the objective enters here as a
// gradient contribution 2*weight_decay*theta added before the moment update,
// so callers never put the penalty itself on the tape.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::vector<Tensor> params, Scalar lr, Scalar beta1 = 0.9, Scalar beta2 = 0.999,
            Scalar eps = 1e-8);

  // One update over all parameters; raises NumericError on any non-finite
  // gradient. Zeroes gradients afterwards.
  void step(Scalar weight_decay);

  void set_lr(Scalar lr) { lr_ = lr; }
  Scalar lr() const { return lr_; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  size_t param_count() const { return params_.size(); }
  std::vector<Scalar>& moment1(size_t i) { return m_[i]; }
  std::vector<Scalar>& moment2(size_t i) { return v_[i]; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<Scalar>> m_, v_;
  Scalar lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace restc
