#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "restc/common.hpp"

namespace restc {

namespace detail {
struct TensorNode {
  std::vector<int> shape;
  std::vector<Scalar> data;
  std::vector<Scalar> grad;  // empty until touched by backward()
  bool requires_grad = false;
  bool tracked = false;  // produced by a recorded op (gradient flows through)
};
}  // namespace detail

// Dense 64-bit float tensor with value semantics on a shared node.
// Rank is 1 or 2 everywhere in this codebase; shape {1} plays the scalar.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, Scalar value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<Scalar> data, bool requires_grad = false);
  static Tensor scalar(Scalar v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const { return node_->shape[0]; }
  int cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }
  size_t size() const { return node_->data.size(); }
  std::string shape_str() const;

  std::vector<Scalar>& values() { return node_->data; }
  const std::vector<Scalar>& values() const { return node_->data; }
  Scalar item() const;
  Scalar at(int r, int c) const { return node_->data[static_cast<size_t>(r) * cols() + c]; }
  Scalar& at(int r, int c) { return node_->data[static_cast<size_t>(r) * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }
  bool tracked() const { return node_->requires_grad || node_->tracked; }
  void mark_tracked() { node_->tracked = true; }

  bool grad_allocated() const { return !node_->grad.empty(); }
  // Allocates a zero grad buffer on first touch.
  std::vector<Scalar>& grad();
  const std::vector<Scalar>& grad() const { return node_->grad; }
  void zero_grad();
  void drop_grad() { node_->grad.clear(); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Append-only record of executed ops; backward() walks it once in exact
// reverse order. One Graph per training step; not shareable across threads.
class Graph {
 public:
  struct Entry {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss)=1 and accumulates into every requires_grad leaf
  // reachable from `loss`. Repeated calls accumulate additively into leaves;
  // intermediate grads are reset per call.
  void backward(const Tensor& loss);

  size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace restc
