#include "t3vae/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "t3vae/errors.hpp"

namespace t3vae::ad {

void Node::ensure_grad() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) grad = Matrix::Zero(value.rows(), value.cols());
}

Tensor Tensor::from_node(std::shared_ptr<Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return from_node(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->ensure_grad();
  return from_node(std::move(n));
}

Tensor Tensor::scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

const Matrix& Tensor::value() const {
  if (!node_) throw ContractError("Tensor: undefined tensor");
  return node_->value;
}

Matrix& Tensor::mutable_value() {
  if (!node_) throw ContractError("Tensor: undefined tensor");
  return node_->value;
}

const Matrix& Tensor::grad() const {
  if (!node_) throw ContractError("Tensor: undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ContractError("Tensor::item: tensor is not 1x1");
  return value()(0, 0);
}

void Tensor::zero_grad() const {
  if (!node_) return;
  node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw ContractError("Tensor::backward: output must be 1x1");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  // Interior nodes start from zero; leaves keep accumulated gradients.
  for (Node* n : order) {
    if (n->backward_fn) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  }
  node_->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

namespace {

Tensor make(Matrix value, std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(fn);
  }
  return Tensor::from_node(std::move(n));
}

// Accumulate into a parent that takes part in differentiation.
template <typename Expr>
void accumulate(Node& parent, const Expr& g) {
  if (!parent.requires_grad) return;
  parent.ensure_grad();
  parent.grad += g;
}

void check_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
  }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
  auto an = a.node();
  auto bn = b.node();
  return make(a.value() * b.value(), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, self.grad * bn->value.transpose());
    if (bn->requires_grad) accumulate(*bn, an->value.transpose() * self.grad);
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  auto an = a.node();
  auto bn = b.node();
  if (is_row_broadcast(a, b)) {
    Matrix v = a.value().rowwise() + b.value().row(0);
    return make(std::move(v), {an, bn}, [an, bn](Node& self) {
      accumulate(*an, self.grad);
      if (bn->requires_grad) accumulate(*bn, self.grad.colwise().sum());
    });
  }
  check_same(a, b, "add");
  return make(a.value() + b.value(), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, self.grad);
  });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  auto an = a.node();
  auto bn = b.node();
  if (is_row_broadcast(a, b)) {
    Matrix v = a.value().rowwise() - b.value().row(0);
    return make(std::move(v), {an, bn}, [an, bn](Node& self) {
      accumulate(*an, self.grad);
      if (bn->requires_grad) accumulate(*bn, -self.grad.colwise().sum());
    });
  }
  check_same(a, b, "sub");
  return make(a.value() - b.value(), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, -self.grad);
  });
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  auto an = a.node();
  auto bn = b.node();
  check_same(a, b, "mul");
  return make(a.value().cwiseProduct(b.value()), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, self.grad.cwiseProduct(bn->value));
    if (bn->requires_grad) accumulate(*bn, self.grad.cwiseProduct(an->value));
  });
}

Tensor operator*(double c, const Tensor& a) {
  auto an = a.node();
  return make(c * a.value(), {an}, [an, c](Node& self) { accumulate(*an, c * self.grad); });
}

Tensor operator+(const Tensor& a, double c) {
  auto an = a.node();
  return make(a.value().array() + c, {an}, [an](Node& self) { accumulate(*an, self.grad); });
}

Tensor operator-(const Tensor& a) { return -1.0 * a; }

Tensor leaky_relu(const Tensor& a, double slope) {
  auto an = a.node();
  Matrix v = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return make(std::move(v), {an}, [an, slope](Node& self) {
    const Matrix d = an->value.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
    accumulate(*an, self.grad.cwiseProduct(d));
  });
}

Tensor exp(const Tensor& a) {
  auto an = a.node();
  Matrix v = a.value().array().exp();
  return make(std::move(v), {an}, [an](Node& self) { accumulate(*an, self.grad.cwiseProduct(self.value)); });
}

Tensor log(const Tensor& a) {
  auto an = a.node();
  Matrix v = a.value().array().log();
  return make(std::move(v), {an},
              [an](Node& self) { accumulate(*an, self.grad.cwiseQuotient(an->value)); });
}

Tensor square(const Tensor& a) {
  auto an = a.node();
  Matrix v = a.value().array().square();
  return make(std::move(v), {an},
              [an](Node& self) { accumulate(*an, 2.0 * self.grad.cwiseProduct(an->value)); });
}

Tensor sqrt(const Tensor& a) {
  auto an = a.node();
  Matrix v = a.value().array().sqrt();
  return make(std::move(v), {an},
              [an](Node& self) { accumulate(*an, (0.5 * self.grad.array() / self.value.array()).matrix()); });
}

Tensor sum(const Tensor& a) {
  auto an = a.node();
  return make(Matrix::Constant(1, 1, a.value().sum()), {an}, [an](Node& self) {
    accumulate(*an, Matrix::Constant(an->value.rows(), an->value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.value().size());
  return (1.0 / n) * sum(a);
}

Tensor row_sum(const Tensor& a) {
  auto an = a.node();
  Matrix v = a.value().rowwise().sum();
  return make(std::move(v), {an}, [an](Node& self) {
    accumulate(*an, self.grad.col(0).replicate(1, an->value.cols()));
  });
}

Tensor columns(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ContractError("columns: range out of bounds");
  auto an = a.node();
  Matrix v = a.value().middleCols(start, count);
  return make(std::move(v), {an}, [an, start, count](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.middleCols(start, count) += self.grad;
  });
}

Tensor concat_columns(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw ContractError("concat_columns: row counts differ");
  auto an = a.node();
  auto bn = b.node();
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Eigen::Index ca = a.cols();
  return make(std::move(v), {an, bn}, [an, bn, ca](Node& self) {
    accumulate(*an, self.grad.leftCols(ca));
    accumulate(*bn, self.grad.rightCols(self.grad.cols() - ca));
  });
}

}  // namespace t3vae::ad
