#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "t3vae/training.hpp"

namespace t3vae::cli {

// Training run description. Optional fields are echoed only when present.
struct RunConfig {
  Family model = Family::gaussian_vae;
  std::optional<double> nu;
  std::optional<double> beta;
  std::optional<int> n;
  std::optional<int> m;   // flat latent dim or m1
  std::optional<int> m2;  // hierarchical only
  std::optional<double> sigma;
  std::optional<double> sigma_z;
  std::optional<double> sigma_x;
  std::vector<int> hidden_sizes{64, 64};
  std::string activation = "leaky_relu";
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int max_epochs = 80;
  int patience = 15;
  int mc_samples = 1;
  std::uint64_t seed = 0;
  std::string dataset = "univariate";  // univariate, bivariate or a CSV path
  std::string split = "quick";

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string canonical() const { return to_json().dump(); }

  // Data dimension implied by the dataset name, if any.
  std::optional<int> dataset_dim() const;
  ModelSpec model_spec(int data_dim) const;
  TrainOptions train_options() const;
};

RunConfig load_run_config(const std::string& path);
// T3_SEED, when set, replaces the configured seed.
void apply_env_overrides(RunConfig& cfg);
std::uint64_t parse_seed(const std::string& text);

}  // namespace t3vae::cli
