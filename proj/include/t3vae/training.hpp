#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "t3vae/hvae.hpp"
#include "t3vae/models.hpp"
#include "t3vae/nn.hpp"

namespace t3vae {

enum class Family { t3vae, gaussian_vae, beta_vae, t3hvae, gaussian_hvae };

std::string family_name(Family f);
Family parse_family(const std::string& name);
bool is_hierarchical(Family f);

struct ModelSpec {
  Family family = Family::gaussian_vae;
  int n = 1;
  int m = 1;    // flat latent dimension, or m1 for hierarchical models
  int m2 = 0;   // 0 selects m1 / 2 (at least 1)
  double nu = kGaussianDf;
  double beta = 1.0;
  double sigma = 1.0;    // flat decoder scale, sigma_x for hierarchical models
  double sigma_z = 1.0;  // hierarchical only
  std::vector<int> hidden{64, 64};

  ModelConfig flat_config() const;
  HierConfig hier_config() const;
};

class Model {
 public:
  virtual ~Model() = default;

  // Batch-mean training objective (gamma-loss or negative ELBO).
  virtual LossValue loss(const Matrix& x, int mc_samples, Rng& rng) const = 0;
  virtual Batch generate(Eigen::Index count, Rng& rng, DecoderOutput output) const = 0;
  Batch generate(Eigen::Index count, Rng& rng) const { return generate(count, rng, DecoderOutput::sample); }
  virtual std::vector<std::pair<std::string, const nn::Mlp*>> networks() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
  // Key facts about the generation path (latent df, latent scale, ...).
  virtual std::vector<std::pair<std::string, double>> generation_metadata() const = 0;

  std::vector<nn::Mlp*> mutable_networks();
  std::vector<ad::Tensor> parameters() const;
  const ModelSpec& spec() const noexcept { return spec_; }
  // Copies parameter values from a model of identical architecture.
  void copy_parameters_from(const Model& other);

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  ModelSpec spec_;
};

std::unique_ptr<Model> make_model(const ModelSpec& spec, Rng& rng);

struct TrainOptions {
  nn::AdamOptions adam{1e-3, 0.9, 0.999, 1e-8, 1e-4};
  Eigen::Index batch_size = 128;
  int max_epochs = 80;
  int patience = 15;
  int mc_samples = 1;
  std::uint64_t seed = 0;
  Eigen::Index eval_batch = 2048;
};

struct EpochLog {
  int epoch;
  double train_loss;
  double val_loss;
  double wall_seconds;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0.0;
  bool stopped_early = false;
  std::uint64_t val_seed = 0;
  long optimizer_steps = 0;
  std::vector<Matrix> adam_m;
  std::vector<Matrix> adam_v;
};

// Deterministic validation objective: every call reseeds the MC noise with `val_seed`.
double evaluate_loss(const Model& model, const Batch& data, int mc_samples, std::uint64_t val_seed,
                     Eigen::Index eval_batch = 2048);

std::uint64_t validation_seed(std::uint64_t seed);

using EpochCallback = std::function<void(const EpochLog&)>;

// Adam with early stopping on the validation objective; on return `model`
// holds the parameters of the best epoch.
TrainResult train(Model& model, const Batch& train_data, const Batch& val_data, const TrainOptions& opts,
                  const EpochCallback& on_epoch = {});

}  // namespace t3vae
