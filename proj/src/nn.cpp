#include "t3vae/nn.hpp"

#include <cmath>

#include "t3vae/errors.hpp"

namespace t3vae::nn {

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng)
    : input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim < 1 || output_dim < 1) throw ContractError("Mlp: dimensions must be positive");
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i + 1] < 1) throw ContractError("Mlp: layer widths must be positive");
    // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    Matrix w(dims[i], dims[i + 1]);
    Matrix b(1, dims[i + 1]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    for (Eigen::Index c = 0; c < b.cols(); ++c) b(0, c) = bound * (2.0 * rng.uniform() - 1.0);
    layers_.push_back({Tensor::parameter(std::move(w)), Tensor::parameter(std::move(b))});
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  if (x.cols() != input_dim_) throw ContractError("Mlp::forward: input has wrong width");
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = ad::matmul(h, layers_[i].weight) + layers_[i].bias;
    if (i + 1 < layers_.size()) h = ad::leaky_relu(h, kLeakySlope);
  }
  return h;
}

Matrix Mlp::predict(const Matrix& x) const {
  if (x.cols() != input_dim_) throw ContractError("Mlp::predict: input has wrong width");
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix next = h * layers_[i].weight.value();
    next.rowwise() += layers_[i].bias.value().row(0);
    if (i + 1 < layers_.size()) next = next.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    h = std::move(next);
  }
  return h;
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

Mlp Mlp::clone() const {
  Mlp m;
  m.input_dim_ = input_dim_;
  m.output_dim_ = output_dim_;
  for (const auto& l : layers_)
    m.layers_.push_back({Tensor::parameter(l.weight.value()), Tensor::parameter(l.bias.value())});
  return m;
}

Adam::Adam(std::vector<Tensor> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw ContractError("Adam: parameters must require gradients");
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor p = params_[i];
    Matrix g = p.grad();
    if (opts_.weight_decay != 0.0) g += opts_.weight_decay * p.value();
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m_[i] / bc1;
    const Matrix v_hat = v_[i] / bc2;
    p.mutable_value() -= (opts_.lr * m_hat.array() / (v_hat.array().sqrt() + opts_.eps)).matrix();
  }
}

void Adam::zero_grad() {
  for (const auto& p : params_) p.zero_grad();
}

void Adam::restore(long step, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) throw ContractError("Adam::restore: size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].rows() != params_[i].rows() || m[i].cols() != params_[i].cols() || v[i].rows() != params_[i].rows() ||
        v[i].cols() != params_[i].cols())
      throw ContractError("Adam::restore: moment shape mismatch");
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

Tensor reparam_gaussian(const Tensor& mu, const Tensor& log_sigma, Rng& rng) {
  Matrix eps(mu.rows(), mu.cols());
  for (Eigen::Index r = 0; r < eps.rows(); ++r)
    for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
  return mu + ad::exp(log_sigma) * Tensor::constant(std::move(eps));
}

Tensor reparam_t(const Tensor& mu, const Tensor& log_sigma, double nu, double extra_df, Rng& rng) {
  if (!(nu > 2.0)) throw DomainError("reparam_t: nu must exceed 2");
  Matrix eps(mu.rows(), mu.cols());
  Eigen::VectorXd delta(mu.rows());
  for (Eigen::Index r = 0; r < eps.rows(); ++r) {
    for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
    delta[r] = rng.chi_squared(nu + extra_df);
  }
  return reparam_t(mu, log_sigma, nu, eps, delta);
}

Tensor reparam_t(const Tensor& mu, const Tensor& log_sigma, double nu, const Matrix& eps, const Eigen::VectorXd& delta) {
  if (eps.rows() != mu.rows() || eps.cols() != mu.cols() || delta.size() != mu.rows())
    throw ContractError("reparam_t: noise shape mismatch");
  Matrix scaled = eps;
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= std::sqrt(nu / delta[r]);
  return mu + ad::exp(log_sigma) * Tensor::constant(std::move(scaled));
}

}  // namespace t3vae::nn
