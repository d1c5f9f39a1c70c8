#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace t3vae::ad {

using Matrix = Eigen::MatrixXd;

struct Node;

// Handle to a node of a reverse-mode computation graph over dense
// matrices. Copies share the node. Leaves created with `parameter` persist
// across graphs and accumulate gradients until `zero_grad`.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double value);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Matrix& value() const;
  Matrix& mutable_value();
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double item() const;

  // Backpropagates from a 1x1 tensor, adding d(this)/d(leaf) into every
  // leaf's gradient.
  void backward() const;
  void zero_grad() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  void ensure_grad();
};

Tensor matmul(const Tensor& a, const Tensor& b);
// Elementwise; `b` may also be a 1 x cols row, broadcast over rows.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(double c, const Tensor& a);
Tensor operator+(const Tensor& a, double c);
Tensor operator-(const Tensor& a);

Tensor leaky_relu(const Tensor& a, double slope = 0.01);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);

// Sum of all entries (1x1).
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Per-row sums (rows x 1).
Tensor row_sum(const Tensor& a);
// Columns [start, start + count).
Tensor columns(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor concat_columns(const Tensor& a, const Tensor& b);

}  // namespace t3vae::ad
