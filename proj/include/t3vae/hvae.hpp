#pragma once

#include <functional>
#include <utility>

#include "t3vae/autodiff.hpp"
#include "t3vae/models.hpp"
#include "t3vae/rng.hpp"
#include "t3vae/tdist.hpp"

namespace t3vae {

enum class HierKind { t3hvae, gaussian_hvae };

struct HierConfig {
  int n = 1;
  int m1 = 2;
  int m2 = 1;
  double nu = kGaussianDf;
  double sigma_z = 1.0;
  double sigma_x = 1.0;
  HierKind kind = HierKind::gaussian_hvae;

  bool heavy_tailed() const noexcept { return kind == HierKind::t3hvae; }
  // -2 / (nu + m1 + m2 + n); zero for the Gaussian kind.
  double gamma() const;
  void validate() const;
};

struct HierConstants {
  double c1_tilde;
  double c2_tilde;
};

HierConstants hier_constants(const HierConfig& cfg);

struct HierEncoderOutput {
  Vector zeta_phi;        // m1
  Vector log_lambda_phi;  // m1, Lambda_phi = diag(exp(2 log_lambda_phi))
  Vector mu_phi;          // m2
  Vector log_sigma_phi;   // m2
};

// q(z1 | x) = t_m1(zeta, Lambda / (1 + n/nu), nu + n)
TParams hier_encoder1_params(const Vector& zeta_phi, const Vector& log_lambda_phi, const HierConfig& cfg);
// q(z2 | x, z1) = t_m2(mu, Sigma / (1 + (m1 + n)/nu), nu + m1 + n)
TParams hier_encoder2_params(const Vector& mu_phi, const Vector& log_sigma_phi, const HierConfig& cfg);
TParams hier_prior_params(const HierConfig& cfg);
// p(z2 | z1) = t_m2(zeta_theta(z1), (1 + |z1|^2/nu) / (1 + m1/nu) sigma_z^2 I, nu + m1)
TParams hier_conditional_prior(const Vector& z1, const Vector& zeta_theta_z1, const HierConfig& cfg);
// p(x | z1, z2) with scale (1 + |z1|^2/nu + |z2 - zeta|^2/(nu sigma_z^2)) / (1 + (m1+m2)/nu) sigma_x^2
TParams hier_decoder_params(const Vector& z1, const Vector& z2, const Vector& zeta_theta_z1, const Vector& mu_theta,
                            const HierConfig& cfg);

// Closed power form of log p(x, z1, z2).
double hier_joint_log_density(const Vector& x, const Vector& z1, const Vector& z2, const Vector& zeta_theta_z1,
                              const Vector& mu_theta, const HierConfig& cfg);

// Expected second moments entering E_q[p(x, z1, z2)^gamma] for a single x.
struct HierBracketTerms {
  double zeta_sq;      // |zeta_phi(x)|^2
  double trace_lambda; // tr Lambda_phi(x)
  double level2_sq;    // E_z1 |mu_phi(x, z1) - zeta_theta(z1)|^2
  double trace_sigma;  // E_z1 tr Sigma_phi(x, z1)
  double recon_sq;     // E_z1 E_z2 |x - mu_theta(z1, z2)|^2
};

// C^gamma sigma_z^{-gamma m2} sigma_x^{-gamma n} {1 + ...}, i.e. E_q[p(x, z1, z2)^gamma].
double hier_cross_entropy_bracket(const HierBracketTerms& terms, const HierConfig& cfg);

struct HierLevel1 {
  ad::Tensor zeta;        // rows x m1
  ad::Tensor log_lambda;  // rows x m1
};

// Per-batch closures over the networks. `encode2` sees the z1 draw (x is
// captured by the caller), `prior_mean` is zeta_theta, `decode` is mu_theta.
struct HierNetworks {
  std::function<std::pair<ad::Tensor, ad::Tensor>(const ad::Tensor& z1)> encode2;
  std::function<ad::Tensor(const ad::Tensor& z1)> prior_mean;
  std::function<ad::Tensor(const ad::Tensor& z1, const ad::Tensor& z2)> decode;
};

struct HierLossValue {
  ad::Tensor total;
  double reconstruction = 0.0;
  double regularizer = 0.0;
};

HierLossValue hier_gamma_loss(const ad::Tensor& x, const HierLevel1& level1, const HierNetworks& nets,
                              const HierConfig& cfg, const HierConstants& k, int mc_samples, Rng& rng);

HierLossValue hier_elbo_loss(const ad::Tensor& x, const HierLevel1& level1, const HierNetworks& nets,
                             const HierConfig& cfg, int mc_samples, Rng& rng);

using HierPriorMean = std::function<Matrix(const Matrix& z1)>;
using HierMeanDecoder = std::function<Matrix(const Matrix& z1, const Matrix& z2)>;

Batch hier_generate(Eigen::Index count, const HierConfig& cfg, const HierPriorMean& prior_mean,
                    const HierMeanDecoder& decode, Rng& rng, DecoderOutput output = DecoderOutput::sample);

}  // namespace t3vae
