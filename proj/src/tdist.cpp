#include "t3vae/tdist.hpp"

#include <cmath>
#include <sstream>

#include "t3vae/errors.hpp"
#include "t3vae/special.hpp"

namespace t3vae {

ScaleMatrix ScaleMatrix::diagonal(Vector diag) {
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) {
      std::ostringstream os;
      os << "ScaleMatrix: diagonal entry " << i << " = " << diag[i] << " is not positive";
      throw NumericError(os.str());
    }
  }
  ScaleMatrix s;
  s.dim_ = diag.size();
  s.log_det_ = diag.array().log().sum();
  s.diag_ = std::move(diag);
  return s;
}

ScaleMatrix ScaleMatrix::identity(Eigen::Index d, double s2) {
  return diagonal(Vector::Constant(d, s2));
}

ScaleMatrix ScaleMatrix::full(Matrix dense) {
  if (dense.rows() != dense.cols()) throw ContractError("ScaleMatrix: matrix must be square");
  if (!dense.isApprox(dense.transpose(), 1e-12)) throw ContractError("ScaleMatrix: matrix must be symmetric");
  Eigen::LLT<Matrix> llt(dense);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(dense);
    std::ostringstream os;
    os << "ScaleMatrix: matrix is not positive-definite (eigenvalues in [" << eig.eigenvalues().minCoeff()
       << ", " << eig.eigenvalues().maxCoeff() << "])";
    throw NumericError(os.str());
  }
  const Vector ldiag = llt.matrixL().toDenseMatrix().diagonal();
  const double cond = (ldiag.maxCoeff() / ldiag.minCoeff());
  if (!(ldiag.minCoeff() > 0.0) || cond * cond > 1e14) {
    std::ostringstream os;
    os << "ScaleMatrix: matrix is numerically singular (condition estimate " << cond * cond << ")";
    throw NumericError(os.str());
  }
  ScaleMatrix s;
  s.dim_ = dense.rows();
  s.log_det_ = 2.0 * ldiag.array().log().sum();
  s.diag_ = dense.diagonal();
  s.chol_ = std::move(llt);
  return s;
}

double ScaleMatrix::trace() const { return diag_.sum(); }

double ScaleMatrix::mahalanobis(const Vector& v) const {
  if (v.size() != dim_) throw ContractError("ScaleMatrix::mahalanobis: dimension mismatch");
  if (is_diagonal()) return (v.array().square() / diag_.array()).sum();
  const Vector w = chol_->matrixL().solve(v);
  return w.squaredNorm();
}

double ScaleMatrix::trace_inv_product(const ScaleMatrix& other) const {
  if (other.dim_ != dim_) throw ContractError("ScaleMatrix::trace_inv_product: dimension mismatch");
  if (is_diagonal() && other.is_diagonal()) return (other.diag_.array() / diag_.array()).sum();
  if (is_diagonal()) return (other.dense().diagonal().array() / diag_.array()).sum();
  return chol_->solve(other.dense()).trace();
}

Vector ScaleMatrix::apply_sqrt(const Vector& e) const {
  if (is_diagonal()) return diag_.array().sqrt() * e.array();
  return chol_->matrixL() * e;
}

ScaleMatrix ScaleMatrix::scaled(double c) const {
  if (is_diagonal()) return diagonal(diag_ * c);
  return full(dense() * c);
}

Matrix ScaleMatrix::dense() const {
  if (is_diagonal()) return diag_.asDiagonal();
  return chol_->reconstructedMatrix();
}

TParams::TParams(Vector mu_, ScaleMatrix scale_, double nu_) : mu(std::move(mu_)), scale(std::move(scale_)), nu(nu_) {
  if (mu.size() != scale.dim()) throw ContractError("TParams: mean and scale dimensions differ");
  if (mu.size() < 1) throw DomainError("TParams: dimension must be at least 1");
  if (!(nu > 0.0)) throw DomainError("TParams: nu must be positive");
}

GaussianParams::GaussianParams(Vector mean_, ScaleMatrix cov_) : mean(std::move(mean_)), cov(std::move(cov_)) {
  if (mean.size() != cov.dim()) throw ContractError("GaussianParams: mean and covariance dimensions differ");
}

double log_norm_const(double nu, int d) {
  if (!(nu > 0.0)) throw DomainError("log_norm_const: nu must be positive");
  if (d < 1) throw DomainError("log_norm_const: d must be at least 1");
  if (std::isinf(nu)) return -0.5 * d * special::kLogTwoPi;
  return special::log_gamma_ratio(0.5 * nu, 0.5 * d) - 0.5 * d * std::log(nu * special::kPi);
}

double log_density(const Vector& x, const TParams& p) {
  if (x.size() != p.dim()) throw ContractError("log_density: dimension mismatch");
  const int d = static_cast<int>(p.dim());
  const double q = p.scale.mahalanobis(x - p.mu);
  if (p.is_gaussian()) return log_norm_const(p.nu, d) - 0.5 * p.scale.log_det() - 0.5 * q;
  return log_norm_const(p.nu, d) - 0.5 * p.scale.log_det() - 0.5 * (p.nu + d) * std::log1p(q / p.nu);
}

double log_density(const Vector& x, const GaussianParams& p) {
  return log_density(x, TParams(p.mean, p.cov, kGaussianDf));
}

Batch sample(const TParams& p, Eigen::Index count, Rng& rng) {
  if (count < 1) throw ContractError("sample: count must be at least 1");
  const Eigen::Index d = p.dim();
  Batch out(count, d);
  Vector e(d);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) e[j] = rng.normal();
    const Vector z = p.scale.apply_sqrt(e);
    const double w = p.is_gaussian() ? 1.0 : std::sqrt(p.nu / rng.chi_squared(p.nu));
    out.row(r) = (p.mu + w * z).transpose();
  }
  return out;
}

Matrix covariance(const TParams& p) {
  if (!(p.nu > 2.0)) throw DomainError("covariance: undefined for nu <= 2");
  const double f = p.is_gaussian() ? 1.0 : p.nu / (p.nu - 2.0);
  return f * p.scale.dense();
}

TParams affine(const TParams& p, const Matrix& a, const Vector& b) {
  if (a.cols() != p.dim() || a.rows() != b.size()) throw ContractError("affine: dimension mismatch");
  const Vector mu = a * p.mu + b;
  const bool a_diag = a.rows() == a.cols() && a.isDiagonal();
  if (p.scale.is_diagonal() && a_diag) {
    const Vector diag = a.diagonal().array().square() * p.scale.diag().array();
    return TParams(mu, ScaleMatrix::diagonal(diag), p.nu);
  }
  Matrix s = a * p.scale.dense() * a.transpose();
  s = 0.5 * (s + s.transpose());
  return TParams(mu, ScaleMatrix::full(s), p.nu);
}

}  // namespace t3vae
