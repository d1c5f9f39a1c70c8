#pragma once

#include <memory>
#include <string>

#include "t3vae/cli/run_config.hpp"
#include "t3vae/training.hpp"

namespace t3vae::cli {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  ModelSpec spec;
  std::unique_ptr<Model> model;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_val = 0.0;
  std::uint64_t val_seed = 0;
  bool has_optimizer = false;
  long optimizer_steps = 0;
  std::vector<Matrix> adam_m;
  std::vector<Matrix> adam_v;
};

// Weights are written as 17-significant-digit decimal strings.
nlohmann::json checkpoint_to_json(const RunConfig& config, const Model& model, const TrainResult& result,
                                  bool with_optimizer = true);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const RunConfig& config, const Model& model, const TrainResult& result,
                     bool with_optimizer = true);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace t3vae::cli
