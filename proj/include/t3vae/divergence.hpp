#pragma once

#include <functional>
#include <span>

#include "t3vae/quadrature.hpp"
#include "t3vae/tdist.hpp"

namespace t3vae {

// Power index of the gamma-power entropy; any real in (-1, 0) or (0, inf).
class GammaIndex {
 public:
  explicit GammaIndex(double gamma);
  double value() const noexcept { return gamma_; }

 private:
  double gamma_;
};

// Coupling under which t_d(., ., nu) is a gamma-flat family: -2 / (nu + d).
GammaIndex gamma_for(double nu, int d);

// H_gamma(p) = -(int p^{1+gamma})^{1/(1+gamma)} with gamma = gamma_for(nu, d).
double gamma_entropy_t(const TParams& p);

// D_gamma(q || p) = gamma^{-1} C_gamma(q, p) - gamma^{-1} H_gamma(q) for two
// t-distributions sharing nu > 2 and dimension d.
double gamma_divergence_tt(const TParams& q, const TParams& p);

double kl_gaussian(const GaussianParams& q, const GaussianParams& p);

using LogDensity = std::function<double(std::span<const double>)>;

struct NumericDivergence {
  double value;
  double abs_error;
};

// Quadrature evaluation of the divergence from its defining integrals, for
// 1-d (adaptive Gauss-Kronrod) and 2-d (tensor Gauss-Legendre) densities.
NumericDivergence gamma_divergence_numeric(const LogDensity& q_logpdf, const LogDensity& p_logpdf, GammaIndex gamma,
                                           const quad::Box& domain);
// -(int p^{1+gamma})^{1/(1+gamma)} by quadrature.
NumericDivergence gamma_entropy_numeric(const LogDensity& logpdf, GammaIndex gamma, const quad::Box& domain);

// Range spanning the real line, positioned over the bulk of both densities.
quad::Box covering_box(const TParams& q, const TParams& p);

// Terms of the first-order expansion
//   (int s^{-g} p^{1+g})^{1/(1+g)}  ~  int s^{-g/(1+g)} p - g H(p)
// for a 1-d density p and positive function s (passed as log s).
struct FirstOrderGap {
  double lhs;
  double rhs;
  double gap;
};
FirstOrderGap first_order_gap(const std::function<double(double)>& logpdf,
                              const std::function<double(double)>& log_sigma, double gamma, const quad::Range& range);

}  // namespace t3vae
