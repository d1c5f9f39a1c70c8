#pragma once

#include <vector>

#include "t3vae/autodiff.hpp"
#include "t3vae/rng.hpp"

namespace t3vae::nn {

using ad::Matrix;
using ad::Tensor;

inline constexpr double kLeakySlope = 0.01;

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

// Fully connected network; LeakyReLU between layers, identity output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);

  Tensor forward(const Tensor& x) const;
  // Forward pass without recording a graph.
  Matrix predict(const Matrix& x) const;

  std::vector<Tensor> parameters() const;
  const std::vector<Linear>& layers() const noexcept { return layers_; }
  std::vector<Linear>& layers() noexcept { return layers_; }
  int input_dim() const noexcept { return input_dim_; }
  int output_dim() const noexcept { return output_dim_; }

  Mlp clone() const;

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<Linear> layers_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opts);

  void step();
  void zero_grad();

  long steps() const noexcept { return step_; }
  const AdamOptions& options() const noexcept { return opts_; }
  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }
  void restore(long step, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<Tensor> params_;
  AdamOptions opts_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_ = 0;
};

// z = mu + sigma * eps, eps ~ N(0, I).
Tensor reparam_gaussian(const Tensor& mu, const Tensor& log_sigma, Rng& rng);

// z = mu + sqrt(nu / delta) * sigma * eps, eps ~ N(0, I), delta ~ chi^2(nu + extra_df)
// drawn once per row. Gradients reach mu and log_sigma only.
Tensor reparam_t(const Tensor& mu, const Tensor& log_sigma, double nu, double extra_df, Rng& rng);
// Same map with the noise supplied: eps is rows x m, delta has one entry per row.
Tensor reparam_t(const Tensor& mu, const Tensor& log_sigma, double nu, const Matrix& eps, const Eigen::VectorXd& delta);

}  // namespace t3vae::nn
