#include "restc/tensor.hpp"

#include <sstream>

namespace restc {

static size_t shape_size(const std::vector<int>& shape, const char* who) {
  if (shape.empty()) throw ShapeError(std::string(who) + ": empty shape");
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError(std::string(who) + ": non-positive extent");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, Scalar value, bool requires_grad) {
  size_t n = shape_size(shape, "Tensor::full");
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->data.assign(n, value);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<Scalar> data, bool requires_grad) {
  size_t n = shape_size(shape, "Tensor::from");
  if (n != data.size()) throw ShapeError("Tensor::from: data size does not match shape");
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->data = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(Scalar v, bool requires_grad) { return from({1}, {v}, requires_grad); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < node_->shape.size(); ++i) {
    if (i) os << ',';
    os << node_->shape[i];
  }
  os << ']';
  return os.str();
}

Scalar Tensor::item() const {
  if (size() != 1) throw ShapeError("item(): tensor has " + shape_str() + ", not a scalar");
  return node_->data[0];
}

std::vector<Scalar>& Tensor::grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
}

void Graph::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                   std::function<void()> backward) {
  output.mark_tracked();
  entries_.push_back(Entry{op, std::move(inputs), std::move(output), std::move(backward)});
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward(): loss must be a scalar, got " +
                     (loss.defined() ? loss.shape_str() : std::string("<undefined>")));
  // Intermediates (tape outputs) restart from zero each call; leaf grads are
  // kept so repeated backward calls accumulate.
  for (Entry& e : entries_) e.output.drop_grad();
  Tensor l = loss;
  l.grad()[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output.grad_allocated()) it->backward();
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

}  // namespace restc
