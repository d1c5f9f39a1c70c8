#include "t3vae/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "t3vae/errors.hpp"

namespace t3vae {

GammaIndex::GammaIndex(double gamma) : gamma_(gamma) {
  if (!(gamma > -1.0) || gamma == 0.0 || !std::isfinite(gamma))
    throw DomainError("GammaIndex: gamma must lie in (-1, 0) or (0, inf)");
}

GammaIndex gamma_for(double nu, int d) {
  if (!(nu > 2.0)) throw DomainError("gamma_for: nu must exceed 2");
  if (d < 0) throw DomainError("gamma_for: d must be non-negative");
  return GammaIndex(-2.0 / (nu + d));
}

namespace {

void require_moments(const TParams& p, const char* who) {
  if (!(p.nu > 2.0) || p.is_gaussian()) throw DomainError(std::string(who) + ": requires finite nu > 2");
}

}  // namespace

double gamma_entropy_t(const TParams& p) {
  require_moments(p, "gamma_entropy_t");
  const int d = static_cast<int>(p.dim());
  const double g = gamma_for(p.nu, d).value();
  const double r = g / (1.0 + g);
  const double log_c = log_norm_const(p.nu, d);
  return -std::exp(r * log_c - 0.5 * r * p.scale.log_det() + std::log1p(d / (p.nu - 2.0)) / (1.0 + g));
}

double gamma_divergence_tt(const TParams& q, const TParams& p) {
  require_moments(q, "gamma_divergence_tt");
  require_moments(p, "gamma_divergence_tt");
  if (q.nu != p.nu) throw ContractError("gamma_divergence_tt: degrees of freedom differ");
  if (q.dim() != p.dim()) throw ContractError("gamma_divergence_tt: dimensions differ");
  const double nu = q.nu;
  const int d = static_cast<int>(q.dim());
  const double g = gamma_for(nu, d).value();
  const double r = g / (1.0 + g);
  const double log_a = std::log1p(d / (nu - 2.0));
  const double a = std::exp(log_a);
  const double prefactor = -std::exp(r * log_norm_const(nu, d) - r * log_a) / g;

  const double tr = p.scale.trace_inv_product(q.scale);
  const double maha = p.scale.mahalanobis(q.mu - p.mu);
  const double b = 1.0 + tr / (nu - 2.0) + maha / nu;
  const double e0 = -0.5 * r * q.scale.log_det();
  const double e1 = -0.5 * r * p.scale.log_det();
  // -A e^{e0} + B e^{e1}, arranged to avoid cancellation for q near p.
  const double bracket = ((tr - d) / (nu - 2.0) + maha / nu) + b * std::expm1(e1) - a * std::expm1(e0);
  return prefactor * bracket;
}

double kl_gaussian(const GaussianParams& q, const GaussianParams& p) {
  if (q.dim() != p.dim()) throw ContractError("kl_gaussian: dimensions differ");
  const double d = static_cast<double>(q.dim());
  return 0.5 * (p.cov.log_det() - q.cov.log_det() - d + p.cov.trace_inv_product(q.cov) +
                p.cov.mahalanobis(q.mean - p.mean));
}

namespace {

quad::QuadResult integrate_box(const LogDensity& f_log, const quad::Box& box) {
  if (box.size() == 1) {
    auto f = [&](double x) {
      const double xs[1] = {x};
      return std::exp(f_log(std::span<const double>(xs, 1)));
    };
    return quad::integrate(f, box[0]);
  }
  if (box.size() == 2) {
    auto f = [&](double x, double y) {
      const double xs[2] = {x, y};
      return std::exp(f_log(std::span<const double>(xs, 2)));
    };
    return quad::integrate_2d(f, box, 200, 1e-8);
  }
  throw ContractError("gamma_divergence_numeric: only 1-d and 2-d domains are supported");
}

}  // namespace

NumericDivergence gamma_divergence_numeric(const LogDensity& q_logpdf, const LogDensity& p_logpdf, GammaIndex gamma,
                                           const quad::Box& domain) {
  const double g = gamma.value();
  const auto iq = integrate_box([&](std::span<const double> x) { return (1.0 + g) * q_logpdf(x); }, domain);
  const auto ip = integrate_box([&](std::span<const double> x) { return (1.0 + g) * p_logpdf(x); }, domain);
  const auto iqp = integrate_box([&](std::span<const double> x) { return q_logpdf(x) + g * p_logpdf(x); }, domain);

  const double h = -std::pow(iq.value, 1.0 / (1.0 + g));
  const double p_norm_pow = std::pow(ip.value, -g / (1.0 + g));
  const double c = -iqp.value * p_norm_pow;
  const double value = (c - h) / g;

  const double dh_diq = std::fabs(h) / ((1.0 + g) * iq.value);
  const double dc_diqp = p_norm_pow;
  const double dc_dip = std::fabs(c * g / ((1.0 + g) * ip.value));
  const double err = (dh_diq * iq.abs_error + dc_diqp * iqp.abs_error + dc_dip * ip.abs_error) / std::fabs(g);
  return {value, err};
}

NumericDivergence gamma_entropy_numeric(const LogDensity& logpdf, GammaIndex gamma, const quad::Box& domain) {
  const double g = gamma.value();
  const auto ip = integrate_box([&](std::span<const double> x) { return (1.0 + g) * logpdf(x); }, domain);
  const double h = -std::pow(ip.value, 1.0 / (1.0 + g));
  return {h, std::fabs(h) / ((1.0 + g) * ip.value) * ip.abs_error};
}

quad::Box covering_box(const TParams& q, const TParams& p) {
  if (q.dim() != p.dim()) throw ContractError("covering_box: dimensions differ");
  quad::Box box;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    const double sq = std::sqrt(q.scale.dense()(i, i));
    const double sp = std::sqrt(p.scale.dense()(i, i));
    const double center = 0.5 * (q.mu[i] + p.mu[i]);
    const double spread = std::max({sq, sp, 0.5 * std::fabs(q.mu[i] - p.mu[i])});
    box.push_back({-INFINITY, INFINITY, center, spread});
  }
  return box;
}

FirstOrderGap first_order_gap(const std::function<double(double)>& logpdf,
                              const std::function<double(double)>& log_sigma, double gamma, const quad::Range& range) {
  GammaIndex g_checked(gamma);
  const double g = g_checked.value();
  const auto power = quad::integrate([&](double x) { return std::exp(-g * log_sigma(x) + (1.0 + g) * logpdf(x)); },
                                     range);
  const auto linear =
      quad::integrate([&](double x) { return std::exp(-g / (1.0 + g) * log_sigma(x) + logpdf(x)); }, range);
  const auto entropy = quad::integrate(
      [&](double x) {
        const double lp = logpdf(x);
        return -std::exp(lp) * lp;
      },
      range);
  const double lhs = std::pow(power.value, 1.0 / (1.0 + g));
  const double rhs = linear.value - g * entropy.value;
  return {lhs, rhs, lhs - rhs};
}

}  // namespace t3vae
