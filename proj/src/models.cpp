#include "t3vae/models.hpp"

#include <cmath>

#include "t3vae/errors.hpp"
#include "t3vae/nn.hpp"

namespace t3vae {

void ModelConfig::validate() const {
  if (n < 1 || m < 1) throw ContractError("ModelConfig: dimensions must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("ModelConfig: sigma must be positive");
  if (kind == ModelKind::t3vae) {
    if (!(nu > 2.0) || !std::isfinite(nu)) throw DomainError("ModelConfig: t3vae requires finite nu > 2");
  } else if (!(beta >= 0.0)) {
    throw DomainError("ModelConfig: beta must be non-negative");
  }
}

DerivedConstants derive_constants(const ModelConfig& cfg) {
  if (cfg.kind != ModelKind::t3vae) throw ContractError("derive_constants: only defined for t3vae");
  cfg.validate();
  const double nu = cfg.nu;
  const double n = cfg.n;
  const double m = cfg.m;
  const double g = -2.0 / (nu + m + n);
  const double log_sigma = std::log(cfg.sigma);

  const double log_c1 = (std::log((nu + m + n - 2.0) / (nu + n - 2.0)) + 0.5 * g * m * std::log1p(n / nu) +
                         g * log_norm_const(nu + n, cfg.m)) /
                        (1.0 + g);
  const double log_c2 = (-g / (1.0 + g)) * (std::log((nu + m + n - 2.0) / (nu - 2.0)) + n * log_sigma -
                                            log_norm_const(nu, cfg.m + cfg.n));
  const double log_tau2 =
      -std::log1p(n / nu) +
      (2.0 / (nu + n - 2.0)) * (-n * log_sigma + log_norm_const(nu, cfg.n) - std::log1p(n / (nu - 2.0)));
  const double c2 = std::exp(log_c2);
  return {g, std::exp(log_c1), c2, std::exp(log_tau2), -g * nu / (2.0 * c2)};
}

TParams encoder_params(const EncoderOutput& out, const ModelConfig& cfg) {
  if (out.mu_phi.size() != cfg.m || out.log_sigma_phi.size() != cfg.m)
    throw ContractError("encoder_params: output width differs from latent dimension");
  const Vector var = (2.0 * out.log_sigma_phi.array()).exp();
  if (!cfg.heavy_tailed()) return TParams(out.mu_phi, ScaleMatrix::diagonal(var), kGaussianDf);
  return TParams(out.mu_phi, ScaleMatrix::diagonal(var / (1.0 + cfg.n / cfg.nu)), cfg.nu + cfg.n);
}

TParams decoder_params(const Vector& z, const Vector& mu_theta_z, const ModelConfig& cfg) {
  if (z.size() != cfg.m || mu_theta_z.size() != cfg.n) throw ContractError("decoder_params: dimension mismatch");
  const double s2 = cfg.sigma * cfg.sigma;
  if (!cfg.heavy_tailed()) return TParams(mu_theta_z, ScaleMatrix::identity(cfg.n, s2), kGaussianDf);
  const double factor = (1.0 + z.squaredNorm() / cfg.nu) / (1.0 + cfg.m / cfg.nu);
  return TParams(mu_theta_z, ScaleMatrix::identity(cfg.n, factor * s2), cfg.nu + cfg.m);
}

TParams prior_params(const ModelConfig& cfg) {
  return TParams(Vector::Zero(cfg.m), ScaleMatrix::identity(cfg.m), cfg.heavy_tailed() ? cfg.nu : kGaussianDf);
}

TParams alternative_prior(const ModelConfig& cfg, const DerivedConstants& k) {
  if (!cfg.heavy_tailed()) return prior_params(cfg);
  return TParams(Vector::Zero(cfg.m), ScaleMatrix::identity(cfg.m, k.tau2), cfg.nu + cfg.n);
}

double joint_log_density(const Vector& x, const Vector& z, const Vector& mu_theta_z, const ModelConfig& cfg) {
  if (x.size() != cfg.n || z.size() != cfg.m || mu_theta_z.size() != cfg.n)
    throw ContractError("joint_log_density: dimension mismatch");
  const double q = z.squaredNorm() + (x - mu_theta_z).squaredNorm() / (cfg.sigma * cfg.sigma);
  const double log_norm = log_norm_const(cfg.heavy_tailed() ? cfg.nu : kGaussianDf, cfg.m + cfg.n) -
                          cfg.n * std::log(cfg.sigma);
  if (!cfg.heavy_tailed()) return log_norm - 0.5 * q;
  return log_norm - 0.5 * (cfg.nu + cfg.m + cfg.n) * std::log1p(q / cfg.nu);
}

TParams shallow_posterior(const Matrix& w, const Vector& b, const ModelConfig& cfg, const Vector& x) {
  if (w.rows() != cfg.n || w.cols() != cfg.m || b.size() != cfg.n || x.size() != cfg.n)
    throw ContractError("shallow_posterior: dimension mismatch");
  const Matrix gram = w * w.transpose() + cfg.sigma * cfg.sigma * Matrix::Identity(cfg.n, cfg.n);
  const Eigen::LLT<Matrix> llt(gram);
  const Vector r = x - b;
  const Vector sol = llt.solve(r);
  const Vector mean = w.transpose() * sol;
  Matrix cov = Matrix::Identity(cfg.m, cfg.m) - w.transpose() * llt.solve(w);
  cov = 0.5 * (cov + cov.transpose());
  if (!cfg.heavy_tailed()) return TParams(mean, ScaleMatrix::full(cov), kGaussianDf);
  const double factor = (1.0 + r.dot(sol) / cfg.nu) / (1.0 + cfg.n / cfg.nu);
  return TParams(mean, ScaleMatrix::full(factor * cov), cfg.nu + cfg.n);
}

namespace {

void check_inputs(const ad::Tensor& x, const EncoderTensors& enc, const ModelConfig& cfg, int mc_samples) {
  cfg.validate();
  if (mc_samples < 1) throw ContractError("loss: mc_samples must be at least 1");
  if (x.cols() != cfg.n) throw ContractError("loss: data width differs from n");
  if (enc.mu.cols() != cfg.m || enc.log_sigma.cols() != cfg.m || enc.mu.rows() != x.rows() ||
      enc.log_sigma.rows() != x.rows())
    throw ContractError("loss: encoder output shape mismatch");
}

// Per-row E_z |x - mu_theta(z)|^2 estimated with `mc_samples` draws.
template <typename Sampler>
ad::Tensor squared_error(const ad::Tensor& x, const DecoderFn& decode, int mc_samples, Sampler&& draw) {
  ad::Tensor acc;
  for (int l = 0; l < mc_samples; ++l) {
    const ad::Tensor recon = decode(draw());
    if (recon.rows() != x.rows() || recon.cols() != x.cols()) throw ContractError("loss: decoder output shape mismatch");
    const ad::Tensor se = ad::row_sum(ad::square(x - recon));
    acc = acc.defined() ? acc + se : se;
  }
  if (mc_samples > 1) acc = (1.0 / mc_samples) * acc;
  return acc;
}

LossValue finish(const ad::Tensor& recon_rows, const ad::Tensor& reg_rows, double recon_weight, double reg_weight) {
  const ad::Tensor recon = ad::mean(recon_rows);
  const ad::Tensor reg = ad::mean(reg_rows);
  LossValue out;
  out.total = recon_weight * recon + reg_weight * reg;
  out.reconstruction = recon_weight * recon.item();
  out.regularizer = reg_weight * reg.item();
  return out;
}

ad::Tensor gamma_regularizer_rows(const EncoderTensors& enc, const ModelConfig& cfg, const DerivedConstants& k) {
  const double trace_coeff = cfg.nu / (cfg.nu + cfg.n - 2.0);
  const double det_coeff = cfg.nu * k.c1 / k.c2;
  const double det_power = -k.gamma / (1.0 + k.gamma);
  const ad::Tensor sq_mu = ad::row_sum(ad::square(enc.mu));
  const ad::Tensor trace = ad::row_sum(ad::exp(2.0 * enc.log_sigma));
  const ad::Tensor det_term = ad::exp(det_power * ad::row_sum(enc.log_sigma));
  return sq_mu + trace_coeff * trace - det_coeff * det_term;
}

ad::Tensor kl_rows(const EncoderTensors& enc) {
  const double m = static_cast<double>(enc.mu.cols());
  return 0.5 * (ad::row_sum(ad::square(enc.mu) + ad::exp(2.0 * enc.log_sigma) - 2.0 * enc.log_sigma) + (-m));
}

EncoderTensors constant_encoder(const EncoderOutput& out) {
  return {ad::Tensor::constant(out.mu_phi.transpose()), ad::Tensor::constant(out.log_sigma_phi.transpose())};
}

}  // namespace

LossValue gamma_loss(const ad::Tensor& x, const EncoderTensors& enc, const DecoderFn& decode, const ModelConfig& cfg,
                     const DerivedConstants& k, int mc_samples, Rng& rng) {
  if (cfg.kind != ModelKind::t3vae) throw ContractError("gamma_loss: requires a t3vae config");
  check_inputs(x, enc, cfg, mc_samples);
  const ad::Tensor se = squared_error(x, decode, mc_samples,
                                      [&] { return nn::reparam_t(enc.mu, enc.log_sigma, cfg.nu, cfg.n, rng); });
  const ad::Tensor reg = gamma_regularizer_rows(enc, cfg, k);
  return finish(se, reg, 0.5 / (cfg.sigma * cfg.sigma), 0.5);
}

LossValue elbo_loss(const ad::Tensor& x, const EncoderTensors& enc, const DecoderFn& decode, const ModelConfig& cfg,
                    int mc_samples, Rng& rng) {
  if (cfg.kind == ModelKind::t3vae) throw ContractError("elbo_loss: requires a Gaussian config");
  check_inputs(x, enc, cfg, mc_samples);
  const ad::Tensor se =
      squared_error(x, decode, mc_samples, [&] { return nn::reparam_gaussian(enc.mu, enc.log_sigma, rng); });
  return finish(se, kl_rows(enc), 0.5 / (cfg.sigma * cfg.sigma), cfg.beta);
}

double gamma_regularizer(const EncoderOutput& out, const ModelConfig& cfg, const DerivedConstants& k) {
  return 0.5 * gamma_regularizer_rows(constant_encoder(out), cfg, k).value()(0, 0);
}

double kl_regularizer(const EncoderOutput& out) { return kl_rows(constant_encoder(out)).value()(0, 0); }

std::string decoder_output_name(DecoderOutput d) { return d == DecoderOutput::mean ? "mean" : "sample"; }

DecoderOutput parse_decoder_output(const std::string& name) {
  if (name == "sample") return DecoderOutput::sample;
  if (name == "mean") return DecoderOutput::mean;
  throw ConfigError("unknown decoder output '" + name + "' (expected sample or mean)");
}

Batch generate(Eigen::Index count, const ModelConfig& cfg, const DerivedConstants& k, const MeanDecoder& decode,
               Rng& rng, DecoderOutput output) {
  cfg.validate();
  const Batch z = sample(alternative_prior(cfg, k), count, rng);
  const Matrix mean = decode(z);
  if (mean.rows() != count || mean.cols() != cfg.n) throw ContractError("generate: decoder output shape mismatch");
  if (output == DecoderOutput::mean) return mean;
  Batch x(count, cfg.n);
  for (Eigen::Index r = 0; r < count; ++r) {
    const TParams dec = decoder_params(z.row(r).transpose(), mean.row(r).transpose(), cfg);
    x.row(r) = sample(dec, 1, rng).row(0);
  }
  return x;
}

}  // namespace t3vae
