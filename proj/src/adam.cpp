#include "restc/adam.hpp"

#include <cmath>
#include <string>

namespace restc {

AdamState::AdamState(std::vector<Tensor> params, Scalar lr, Scalar beta1, Scalar beta2, Scalar eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::step(Scalar weight_decay) {
  ++t_;
  const Scalar bc1 = 1.0 - std::pow(beta1_, static_cast<Scalar>(t_));
  const Scalar bc2 = 1.0 - std::pow(beta2_, static_cast<Scalar>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    std::vector<Scalar>& theta = p.values();
    std::vector<Scalar>& grad = p.grad();  // zeros when the parameter was unused
    std::vector<Scalar>& m = m_[pi];
    std::vector<Scalar>& v = v_[pi];
    for (size_t i = 0; i < theta.size(); ++i) {
      // L2 term enters as its gradient; never materialized on the tape.
      const Scalar gi = grad[i] + 2.0 * weight_decay * theta[i];
      if (!std::isfinite(gi))
        throw NumericError("adam: non-finite gradient at parameter " + std::to_string(pi) +
                           " element " + std::to_string(i));
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const Scalar mhat = m[i] / bc1;
      const Scalar vhat = v[i] / bc2;
      theta[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
}

}  // namespace restc
