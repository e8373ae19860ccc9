#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tcprof {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  size_t numel() const {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }
  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantic handle onto an autodiff graph node. Reverse-mode: build the
// graph forward, then call backward() on a scalar result; every reachable
// node's backward_fn runs exactly once in reverse topological order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double fill, bool requires_grad = false);
  static Tensor from(std::vector<double> values, std::vector<int> shape,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  size_t numel() const { return node_->numel(); }

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  double item() const;  // scalar tensors only

  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const;
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Scalar tensors only; seeds d(self)/d(self) = 1 and runs the graph.
  void backward();

  std::shared_ptr<TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode> node);

 private:
  std::shared_ptr<TensorNode> node_;
};

// Creates a non-leaf node whose requires_grad is inherited from its parents.
Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn);

// Elementwise / reduction primitives.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Gathers rows of a 2-D tensor (or elements of a 1-D tensor); gradient
// scatters back to the gathered positions.
Tensor select_rows(const Tensor& a, const std::vector<int>& rows);

// Per-row maximum of a 2-D tensor (N,F) -> (N,). Gradient routes to the
// argmax entry only; ties break toward the lowest index.
Tensor row_max(const Tensor& a);

}  // namespace tcprof
