#pragma once

#include <functional>
#include <string>

#include "t3vae/autodiff.hpp"
#include "t3vae/rng.hpp"
#include "t3vae/tdist.hpp"

namespace t3vae {

enum class ModelKind { t3vae, gaussian_vae, beta_vae };

struct ModelConfig {
  int n = 1;  // data dimension
  int m = 1;  // latent dimension
  double nu = kGaussianDf;
  double sigma = 1.0;  // decoder scale
  double beta = 1.0;   // KL weight for gaussian_vae / beta_vae
  ModelKind kind = ModelKind::gaussian_vae;

  bool heavy_tailed() const noexcept { return kind == ModelKind::t3vae; }
  void validate() const;
};

struct DerivedConstants {
  double gamma;
  double c1;
  double c2;
  double tau2;   // scale of the alternative prior t_m(0, tau2 I, nu + n)
  double alpha;  // regularizer weight -gamma nu / (2 C2)
};

DerivedConstants derive_constants(const ModelConfig& cfg);

struct EncoderOutput {
  Vector mu_phi;
  Vector log_sigma_phi;  // Sigma_phi = diag(exp(2 log_sigma_phi))
};

// t_m(mu, (1 + n/nu)^{-1} Sigma_phi, nu + n); N(mu, Sigma_phi) for Gaussian kinds.
TParams encoder_params(const EncoderOutput& out, const ModelConfig& cfg);
// t_n(mu_theta(z), (1 + |z|^2/nu) / (1 + m/nu) sigma^2 I, nu + m); N(mu_theta(z), sigma^2 I) for Gaussian kinds.
TParams decoder_params(const Vector& z, const Vector& mu_theta_z, const ModelConfig& cfg);
TParams prior_params(const ModelConfig& cfg);
TParams alternative_prior(const ModelConfig& cfg, const DerivedConstants& k);

double joint_log_density(const Vector& x, const Vector& z, const Vector& mu_theta_z, const ModelConfig& cfg);

// Exact posterior of z given x when mu_theta(z) = W z + b.
TParams shallow_posterior(const Matrix& w, const Vector& b, const ModelConfig& cfg, const Vector& x);

struct EncoderTensors {
  ad::Tensor mu;
  ad::Tensor log_sigma;
};

using DecoderFn = std::function<ad::Tensor(const ad::Tensor&)>;

// Batch-mean objective and its split into the reconstruction part
// (E|x - mu_theta(z)|^2 / (2 sigma^2)) and everything else.
struct LossValue {
  ad::Tensor total;
  double reconstruction = 0.0;
  double regularizer = 0.0;
};

LossValue gamma_loss(const ad::Tensor& x, const EncoderTensors& enc, const DecoderFn& decode, const ModelConfig& cfg,
                     const DerivedConstants& k, int mc_samples, Rng& rng);

LossValue elbo_loss(const ad::Tensor& x, const EncoderTensors& enc, const DecoderFn& decode, const ModelConfig& cfg,
                    int mc_samples, Rng& rng);

// Non-reconstruction part of the per-sample objective for one encoder output.
double gamma_regularizer(const EncoderOutput& out, const ModelConfig& cfg, const DerivedConstants& k);
double kl_regularizer(const EncoderOutput& out);

using MeanDecoder = std::function<Matrix(const Matrix&)>;

// `sample` draws x from the decoder distribution; `mean` emits mu_theta(z).
enum class DecoderOutput { sample, mean };
std::string decoder_output_name(DecoderOutput d);
DecoderOutput parse_decoder_output(const std::string& name);

// Prior (alternative prior for t3vae) -> decoder mean -> decoder noise.
Batch generate(Eigen::Index count, const ModelConfig& cfg, const DerivedConstants& k, const MeanDecoder& decode,
               Rng& rng, DecoderOutput output = DecoderOutput::sample);

}  // namespace t3vae
