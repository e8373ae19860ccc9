#include "tcprof/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace tcprof {

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double fill, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value.assign(node->numel(), fill);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::from(std::vector<double> values, std::vector<int> shape, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  if (values.size() != node->numel()) {
    throw std::invalid_argument("Tensor::from: value count does not match shape");
  }
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({v}, {1}, requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<TensorNode> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::backward() {
  if (numel() != 1) throw std::invalid_argument("backward: only scalar roots supported");

  // Iterative post-order DFS gives reverse topological order.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      TensorNode* p = n->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) n->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (node->value.size() != node->numel()) {
    throw std::invalid_argument("make_op: value count does not match shape");
  }
  for (const Tensor& p : parents) {
    node->parents.push_back(p.node());
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  node->backward_fn = std::move(backward_fn);
  return Tensor::wrap(std::move(node));
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i];
      pb.grad[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i];
      pb.grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i] * pb.value[i];
      pb.grad[i] += n.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * s;
  return make_op(a.shape(), std::move(v), {a}, [s](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * s;
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + s;
  return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
  });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor relu(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      if (pa.value[i] > 0.0) pa.grad[i] += n.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({1}, {s}, {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += n.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor select_rows(const Tensor& a, const std::vector<int>& rows) {
  if (a.ndim() != 1 && a.ndim() != 2) {
    throw std::invalid_argument("select_rows: tensor must be 1-D or 2-D");
  }
  const int stride = a.ndim() == 2 ? a.dim(1) : 1;
  const int n_rows = a.dim(0);
  for (int r : rows) {
    if (r < 0 || r >= n_rows) throw std::invalid_argument("select_rows: row index out of range");
  }

  std::vector<double> v(rows.size() * stride);
  for (size_t k = 0; k < rows.size(); ++k) {
    std::copy_n(a.values().begin() + static_cast<size_t>(rows[k]) * stride, stride,
                v.begin() + k * stride);
  }
  std::vector<int> shape = a.ndim() == 2 ? std::vector<int>{static_cast<int>(rows.size()), stride}
                                         : std::vector<int>{static_cast<int>(rows.size())};
  return make_op(std::move(shape), std::move(v), {a}, [rows, stride](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (size_t k = 0; k < rows.size(); ++k) {
      for (int j = 0; j < stride; ++j) {
        pa.grad[static_cast<size_t>(rows[k]) * stride + j] += n.grad[k * stride + j];
      }
    }
  });
}

Tensor row_max(const Tensor& a) {
  if (a.ndim() != 2) throw std::invalid_argument("row_max: tensor must be 2-D");
  const int n = a.dim(0), f = a.dim(1);
  if (f == 0) throw std::invalid_argument("row_max: empty rows");

  std::vector<double> v(n);
  auto argmax = std::make_shared<std::vector<int>>(n);
  for (int i = 0; i < n; ++i) {
    const double* row = a.values().data() + static_cast<size_t>(i) * f;
    int best = 0;
    for (int j = 1; j < f; ++j) {
      if (row[j] > row[best]) best = j;  // strict > keeps the lowest tied index
    }
    (*argmax)[i] = best;
    v[i] = row[best];
  }
  return make_op({n}, std::move(v), {a}, [argmax, f](TensorNode& n_) {
    auto& pa = *n_.parents[0];
    pa.ensure_grad();
    for (size_t i = 0; i < n_.grad.size(); ++i) {
      pa.grad[i * f + (*argmax)[i]] += n_.grad[i];
    }
  });
}

}  // namespace tcprof
