#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "t3vae/rng.hpp"

namespace t3vae {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Rows are samples, columns are coordinates.
using Batch = Eigen::MatrixXd;

inline constexpr double kGaussianDf = std::numeric_limits<double>::infinity();

// Symmetric positive-definite dispersion matrix, stored either as a diagonal
// or as a dense matrix with its Cholesky factor. Immutable once built.
class ScaleMatrix {
 public:
  static ScaleMatrix diagonal(Vector diag);
  static ScaleMatrix identity(Eigen::Index d, double s2 = 1.0);
  static ScaleMatrix full(Matrix dense);

  Eigen::Index dim() const noexcept { return dim_; }
  bool is_diagonal() const noexcept { return !chol_.has_value(); }
  double log_det() const noexcept { return log_det_; }
  double trace() const;

  // v^T S^{-1} v
  double mahalanobis(const Vector& v) const;
  // tr(S^{-1} other)
  double trace_inv_product(const ScaleMatrix& other) const;
  // L e with S = L L^T
  Vector apply_sqrt(const Vector& e) const;
  ScaleMatrix scaled(double c) const;
  Matrix dense() const;
  const Vector& diag() const noexcept { return diag_; }

 private:
  ScaleMatrix() = default;

  Eigen::Index dim_ = 0;
  Vector diag_;
  std::optional<Eigen::LLT<Matrix>> chol_;
  double log_det_ = 0.0;
};

// Multivariate Student-t t_d(mu, scale, nu). nu = kGaussianDf is the
// Gaussian limit N(mu, scale).
struct TParams {
  TParams(Vector mu, ScaleMatrix scale, double nu);

  Eigen::Index dim() const noexcept { return mu.size(); }
  bool is_gaussian() const noexcept { return nu == kGaussianDf; }

  Vector mu;
  ScaleMatrix scale;
  double nu;
};

struct GaussianParams {
  GaussianParams(Vector mean, ScaleMatrix cov);

  Eigen::Index dim() const noexcept { return mean.size(); }

  Vector mean;
  ScaleMatrix cov;
};

// log C_{nu,d} = lgamma((nu+d)/2) - lgamma(nu/2) - (d/2) log(nu pi).
double log_norm_const(double nu, int d);

double log_density(const Vector& x, const TParams& p);
double log_density(const Vector& x, const GaussianParams& p);

// mu + Z / sqrt(V / nu) with Z ~ N(0, scale), V ~ chi^2(nu).
Batch sample(const TParams& p, Eigen::Index count, Rng& rng);

// nu / (nu - 2) * scale.
Matrix covariance(const TParams& p);

// Law of A x + b for x ~ p.
TParams affine(const TParams& p, const Matrix& a, const Vector& b);

}  // namespace t3vae
