#include "t3vae/hvae.hpp"

#include <cmath>

#include "t3vae/errors.hpp"
#include "t3vae/nn.hpp"

namespace t3vae {

double HierConfig::gamma() const {
  if (!heavy_tailed()) return 0.0;
  return -2.0 / (nu + m1 + m2 + n);
}

void HierConfig::validate() const {
  if (n < 1 || m1 < 1 || m2 < 1) throw ContractError("HierConfig: dimensions must be positive");
  if (!(sigma_z > 0.0) || !(sigma_x > 0.0) || !std::isfinite(sigma_z) || !std::isfinite(sigma_x))
    throw DomainError("HierConfig: scales must be positive");
  if (heavy_tailed() && (!(nu > 2.0) || !std::isfinite(nu)))
    throw DomainError("HierConfig: t3hvae requires finite nu > 2");
}

HierConstants hier_constants(const HierConfig& cfg) {
  if (!cfg.heavy_tailed()) throw ContractError("hier_constants: only defined for t3hvae");
  cfg.validate();
  const double nu = cfg.nu;
  const double n = cfg.n;
  const double m1 = cfg.m1;
  const double m2 = cfg.m2;
  const double g = cfg.gamma();
  const double r = g / (1.0 + g);

  const double log_c1 = r * log_norm_const(nu + m1 + n, cfg.m2) + 0.5 * r * m2 * std::log1p((m1 + n) / nu) +
                        std::log1p(m2 / (nu + m1 + n - 2.0)) / (1.0 + g);
  const double log_c2 =
      (g * log_norm_const(nu, cfg.m1 + cfg.m2 + cfg.n) - g * m2 * std::log(cfg.sigma_z) - g * n * std::log(cfg.sigma_x)) /
          (1.0 + g) -
      r * std::log1p((m1 + m2 + n) / (nu - 2.0));
  return {std::exp(log_c1), std::exp(log_c2)};
}

namespace {

Vector variances(const Vector& log_scale) { return (2.0 * log_scale.array()).exp(); }

}  // namespace

TParams hier_encoder1_params(const Vector& zeta_phi, const Vector& log_lambda_phi, const HierConfig& cfg) {
  if (zeta_phi.size() != cfg.m1 || log_lambda_phi.size() != cfg.m1)
    throw ContractError("hier_encoder1_params: width differs from m1");
  if (!cfg.heavy_tailed()) return TParams(zeta_phi, ScaleMatrix::diagonal(variances(log_lambda_phi)), kGaussianDf);
  return TParams(zeta_phi, ScaleMatrix::diagonal(variances(log_lambda_phi) / (1.0 + cfg.n / cfg.nu)), cfg.nu + cfg.n);
}

TParams hier_encoder2_params(const Vector& mu_phi, const Vector& log_sigma_phi, const HierConfig& cfg) {
  if (mu_phi.size() != cfg.m2 || log_sigma_phi.size() != cfg.m2)
    throw ContractError("hier_encoder2_params: width differs from m2");
  if (!cfg.heavy_tailed()) return TParams(mu_phi, ScaleMatrix::diagonal(variances(log_sigma_phi)), kGaussianDf);
  const double extra = cfg.m1 + cfg.n;
  return TParams(mu_phi, ScaleMatrix::diagonal(variances(log_sigma_phi) / (1.0 + extra / cfg.nu)), cfg.nu + extra);
}

TParams hier_prior_params(const HierConfig& cfg) {
  return TParams(Vector::Zero(cfg.m1), ScaleMatrix::identity(cfg.m1), cfg.heavy_tailed() ? cfg.nu : kGaussianDf);
}

TParams hier_conditional_prior(const Vector& z1, const Vector& zeta_theta_z1, const HierConfig& cfg) {
  if (z1.size() != cfg.m1 || zeta_theta_z1.size() != cfg.m2)
    throw ContractError("hier_conditional_prior: dimension mismatch");
  const double s2 = cfg.sigma_z * cfg.sigma_z;
  if (!cfg.heavy_tailed()) return TParams(zeta_theta_z1, ScaleMatrix::identity(cfg.m2, s2), kGaussianDf);
  const double factor = (1.0 + z1.squaredNorm() / cfg.nu) / (1.0 + cfg.m1 / cfg.nu);
  return TParams(zeta_theta_z1, ScaleMatrix::identity(cfg.m2, factor * s2), cfg.nu + cfg.m1);
}

TParams hier_decoder_params(const Vector& z1, const Vector& z2, const Vector& zeta_theta_z1, const Vector& mu_theta,
                            const HierConfig& cfg) {
  if (z1.size() != cfg.m1 || z2.size() != cfg.m2 || zeta_theta_z1.size() != cfg.m2 || mu_theta.size() != cfg.n)
    throw ContractError("hier_decoder_params: dimension mismatch");
  const double s2 = cfg.sigma_x * cfg.sigma_x;
  if (!cfg.heavy_tailed()) return TParams(mu_theta, ScaleMatrix::identity(cfg.n, s2), kGaussianDf);
  const double q = z1.squaredNorm() / cfg.nu + (z2 - zeta_theta_z1).squaredNorm() / (cfg.nu * cfg.sigma_z * cfg.sigma_z);
  const double factor = (1.0 + q) / (1.0 + (cfg.m1 + cfg.m2) / cfg.nu);
  return TParams(mu_theta, ScaleMatrix::identity(cfg.n, factor * s2), cfg.nu + cfg.m1 + cfg.m2);
}

double hier_joint_log_density(const Vector& x, const Vector& z1, const Vector& z2, const Vector& zeta_theta_z1,
                              const Vector& mu_theta, const HierConfig& cfg) {
  if (x.size() != cfg.n || z1.size() != cfg.m1 || z2.size() != cfg.m2 || zeta_theta_z1.size() != cfg.m2 ||
      mu_theta.size() != cfg.n)
    throw ContractError("hier_joint_log_density: dimension mismatch");
  const double q = z1.squaredNorm() + (z2 - zeta_theta_z1).squaredNorm() / (cfg.sigma_z * cfg.sigma_z) +
                   (x - mu_theta).squaredNorm() / (cfg.sigma_x * cfg.sigma_x);
  const int d = cfg.m1 + cfg.m2 + cfg.n;
  const double log_norm = log_norm_const(cfg.heavy_tailed() ? cfg.nu : kGaussianDf, d) -
                          cfg.m2 * std::log(cfg.sigma_z) - cfg.n * std::log(cfg.sigma_x);
  if (!cfg.heavy_tailed()) return log_norm - 0.5 * q;
  return log_norm + std::log1p(q / cfg.nu) / cfg.gamma();
}

double hier_cross_entropy_bracket(const HierBracketTerms& t, const HierConfig& cfg) {
  if (!cfg.heavy_tailed()) throw ContractError("hier_cross_entropy_bracket: only defined for t3hvae");
  cfg.validate();
  const double nu = cfg.nu;
  const double g = cfg.gamma();
  const double log_pref = g * log_norm_const(nu, cfg.m1 + cfg.m2 + cfg.n) - g * cfg.m2 * std::log(cfg.sigma_z) -
                          g * cfg.n * std::log(cfg.sigma_x);
  const double inner = 1.0 + (t.zeta_sq + nu / (nu + cfg.n - 2.0) * t.trace_lambda) / nu +
                       (t.level2_sq + nu / (nu + cfg.m1 + cfg.n - 2.0) * t.trace_sigma) /
                           (nu * cfg.sigma_z * cfg.sigma_z) +
                       t.recon_sq / (nu * cfg.sigma_x * cfg.sigma_x);
  return std::exp(log_pref) * inner;
}

namespace {

void check_inputs(const ad::Tensor& x, const HierLevel1& l1, const HierConfig& cfg, int mc_samples) {
  cfg.validate();
  if (mc_samples < 1) throw ContractError("hier loss: mc_samples must be at least 1");
  if (x.cols() != cfg.n) throw ContractError("hier loss: data width differs from n");
  if (l1.zeta.cols() != cfg.m1 || l1.log_lambda.cols() != cfg.m1 || l1.zeta.rows() != x.rows() ||
      l1.log_lambda.rows() != x.rows())
    throw ContractError("hier loss: level-1 encoder shape mismatch");
}

void check_level2(const ad::Tensor& mu, const ad::Tensor& log_sigma, const ad::Tensor& zeta, const HierConfig& cfg,
                  Eigen::Index rows) {
  if (mu.cols() != cfg.m2 || log_sigma.cols() != cfg.m2 || zeta.cols() != cfg.m2 || mu.rows() != rows ||
      log_sigma.rows() != rows || zeta.rows() != rows)
    throw ContractError("hier loss: level-2 shape mismatch");
}

ad::Tensor accumulate(const ad::Tensor& acc, const ad::Tensor& v) { return acc.defined() ? acc + v : v; }

HierLossValue finish(const ad::Tensor& recon_rows, const ad::Tensor& reg_rows, double recon_weight) {
  const ad::Tensor recon = ad::mean(recon_rows);
  const ad::Tensor reg = ad::mean(reg_rows);
  HierLossValue out;
  out.total = recon_weight * recon + reg;
  out.reconstruction = recon_weight * recon.item();
  out.regularizer = reg.item();
  return out;
}

}  // namespace

HierLossValue hier_gamma_loss(const ad::Tensor& x, const HierLevel1& l1, const HierNetworks& nets,
                              const HierConfig& cfg, const HierConstants& k, int mc_samples, Rng& rng) {
  if (!cfg.heavy_tailed()) throw ContractError("hier_gamma_loss: requires a t3hvae config");
  check_inputs(x, l1, cfg, mc_samples);
  const double nu = cfg.nu;
  const double g = cfg.gamma();
  const double sz2 = cfg.sigma_z * cfg.sigma_z;
  const double ratio = k.c1_tilde / k.c2_tilde;

  ad::Tensor recon;
  ad::Tensor level2;
  for (int l = 0; l < mc_samples; ++l) {
    const ad::Tensor z1 = nn::reparam_t(l1.zeta, l1.log_lambda, nu, cfg.n, rng);
    const auto [mu2, log_sigma2] = nets.encode2(z1);
    const ad::Tensor zeta_theta = nets.prior_mean(z1);
    check_level2(mu2, log_sigma2, zeta_theta, cfg, x.rows());
    const ad::Tensor z2 = nn::reparam_t(mu2, log_sigma2, nu, cfg.m1 + cfg.n, rng);
    const ad::Tensor out = nets.decode(z1, z2);
    if (out.rows() != x.rows() || out.cols() != x.cols()) throw ContractError("hier loss: decoder shape mismatch");
    recon = accumulate(recon, ad::row_sum(ad::square(x - out)));
    const ad::Tensor term = ad::row_sum(ad::square(mu2 - zeta_theta)) +
                            (nu / (nu + cfg.m1 + cfg.n - 2.0)) * ad::row_sum(ad::exp(2.0 * log_sigma2)) -
                            (nu * sz2 * ratio) * ad::exp((-g / (1.0 + g)) * ad::row_sum(log_sigma2));
    level2 = accumulate(level2, term);
  }
  const double inv_l = 1.0 / mc_samples;
  const ad::Tensor level1 = ad::row_sum(ad::square(l1.zeta)) +
                            (nu / (nu + cfg.n - 2.0)) * ad::row_sum(ad::exp(2.0 * l1.log_lambda)) +
                            (g * nu * ratio) * ad::row_sum(l1.log_lambda);
  const ad::Tensor reg = 0.5 * (level1 + (inv_l / sz2) * level2);
  return finish(inv_l * recon, reg, 0.5 / (cfg.sigma_x * cfg.sigma_x));
}

HierLossValue hier_elbo_loss(const ad::Tensor& x, const HierLevel1& l1, const HierNetworks& nets,
                             const HierConfig& cfg, int mc_samples, Rng& rng) {
  if (cfg.heavy_tailed()) throw ContractError("hier_elbo_loss: requires a gaussian_hvae config");
  check_inputs(x, l1, cfg, mc_samples);
  const double sz2 = cfg.sigma_z * cfg.sigma_z;
  const double m1 = cfg.m1;
  const double m2 = cfg.m2;

  ad::Tensor recon;
  ad::Tensor kl2;
  for (int l = 0; l < mc_samples; ++l) {
    const ad::Tensor z1 = nn::reparam_gaussian(l1.zeta, l1.log_lambda, rng);
    const auto [mu2, log_sigma2] = nets.encode2(z1);
    const ad::Tensor zeta_theta = nets.prior_mean(z1);
    check_level2(mu2, log_sigma2, zeta_theta, cfg, x.rows());
    const ad::Tensor z2 = nn::reparam_gaussian(mu2, log_sigma2, rng);
    const ad::Tensor out = nets.decode(z1, z2);
    if (out.rows() != x.rows() || out.cols() != x.cols()) throw ContractError("hier loss: decoder shape mismatch");
    recon = accumulate(recon, ad::row_sum(ad::square(x - out)));
    const ad::Tensor term =
        0.5 * (ad::row_sum((1.0 / sz2) * (ad::exp(2.0 * log_sigma2) + ad::square(mu2 - zeta_theta)) -
                           2.0 * log_sigma2) +
               (m2 * std::log(sz2) - m2));
    kl2 = accumulate(kl2, term);
  }
  const double inv_l = 1.0 / mc_samples;
  const ad::Tensor kl1 =
      0.5 * (ad::row_sum(ad::square(l1.zeta) + ad::exp(2.0 * l1.log_lambda) - 2.0 * l1.log_lambda) + (-m1));
  return finish(inv_l * recon, kl1 + inv_l * kl2, 0.5 / (cfg.sigma_x * cfg.sigma_x));
}

Batch hier_generate(Eigen::Index count, const HierConfig& cfg, const HierPriorMean& prior_mean,
                    const HierMeanDecoder& decode, Rng& rng, DecoderOutput output) {
  cfg.validate();
  const Batch z1 = sample(hier_prior_params(cfg), count, rng);
  const Matrix zeta = prior_mean(z1);
  if (zeta.rows() != count || zeta.cols() != cfg.m2) throw ContractError("hier_generate: prior mean shape mismatch");
  Batch z2(count, cfg.m2);
  for (Eigen::Index r = 0; r < count; ++r)
    z2.row(r) = sample(hier_conditional_prior(z1.row(r).transpose(), zeta.row(r).transpose(), cfg), 1, rng).row(0);
  const Matrix mean = decode(z1, z2);
  if (mean.rows() != count || mean.cols() != cfg.n) throw ContractError("hier_generate: decoder shape mismatch");
  if (output == DecoderOutput::mean) return mean;
  Batch x(count, cfg.n);
  for (Eigen::Index r = 0; r < count; ++r) {
    const TParams dec = hier_decoder_params(z1.row(r).transpose(), z2.row(r).transpose(), zeta.row(r).transpose(),
                                            mean.row(r).transpose(), cfg);
    x.row(r) = sample(dec, 1, rng).row(0);
  }
  return x;
}

}  // namespace t3vae
