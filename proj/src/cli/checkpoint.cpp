#include "t3vae/cli/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"

namespace t3vae::cli {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(format_double(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("checkpoint: malformed number '" + s + "'");
  return v;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw IoError("checkpoint: matrix size does not match its shape");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_double(data[k++].get<std::string>());
  return m;
}

}  // namespace

json checkpoint_to_json(const RunConfig& config, const Model& model, const TrainResult& result, bool with_optimizer) {
  json j;
  j["format"] = "t3vae-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config.to_json();
  const ModelSpec& s = model.spec();
  j["resolved"] = {{"n", s.n}, {"m", s.m}, {"m2", is_hierarchical(s.family) ? s.hier_config().m2 : 0}};
  j["best_epoch"] = result.best_epoch;
  j["epochs_run"] = result.log.size();
  j["best_val_loss"] = format_double(result.best_val);
  j["val_seed"] = std::to_string(result.val_seed);
  json nets = json::array();
  for (const auto& [name, net] : model.networks()) {
    json layers = json::array();
    for (const auto& l : net->layers())
      layers.push_back({{"weight", matrix_to_json(l.weight.value())}, {"bias", matrix_to_json(l.bias.value())}});
    nets.push_back({{"name", name}, {"layers", std::move(layers)}});
  }
  j["networks"] = std::move(nets);
  if (with_optimizer && !result.adam_m.empty()) {
    json m = json::array();
    json v = json::array();
    for (const auto& a : result.adam_m) m.push_back(matrix_to_json(a));
    for (const auto& a : result.adam_v) v.push_back(matrix_to_json(a));
    j["optimizer"] = {{"kind", "adam"}, {"steps", result.optimizer_steps}, {"m", std::move(m)}, {"v", std::move(v)}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "t3vae-checkpoint") throw IoError("not a t3vae checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ConfigError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    ck.config = RunConfig::from_json(j.at("config"));
    const auto& res = j.at("resolved");
    ck.spec = ck.config.model_spec(res.at("n").get<int>());
    ck.spec.m = res.at("m").get<int>();
    if (is_hierarchical(ck.spec.family)) ck.spec.m2 = res.at("m2").get<int>();
    Rng init(0);
    ck.model = make_model(ck.spec, init);

    const auto& nets = j.at("networks");
    auto targets = ck.model->mutable_networks();
    const auto names = ck.model->networks();
    if (nets.size() != targets.size()) throw IoError("checkpoint: network count mismatch");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (nets[i].at("name").get<std::string>() != names[i].first)
        throw IoError("checkpoint: unexpected network '" + nets[i].at("name").get<std::string>() + "'");
      const auto& layers = nets[i].at("layers");
      auto& dst = targets[i]->layers();
      if (layers.size() != dst.size()) throw IoError("checkpoint: layer count mismatch in " + names[i].first);
      for (std::size_t l = 0; l < dst.size(); ++l) {
        Matrix w = matrix_from_json(layers[l].at("weight"));
        Matrix b = matrix_from_json(layers[l].at("bias"));
        if (w.rows() != dst[l].weight.rows() || w.cols() != dst[l].weight.cols() || b.rows() != 1 ||
            b.cols() != dst[l].bias.cols())
          throw IoError("checkpoint: layer shape mismatch in " + names[i].first);
        dst[l].weight.mutable_value() = std::move(w);
        dst[l].bias.mutable_value() = std::move(b);
      }
    }
    ck.best_epoch = j.at("best_epoch").get<int>();
    ck.epochs_run = j.at("epochs_run").get<int>();
    ck.best_val = parse_double(j.at("best_val_loss").get<std::string>());
    ck.val_seed = parse_seed(j.at("val_seed").get<std::string>());
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      ck.has_optimizer = true;
      ck.optimizer_steps = o.at("steps").get<long>();
      for (const auto& a : o.at("m")) ck.adam_m.push_back(matrix_from_json(a));
      for (const auto& a : o.at("v")) ck.adam_v.push_back(matrix_from_json(a));
    }
    return ck;
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint is malformed: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const RunConfig& config, const Model& model, const TrainResult& result,
                     bool with_optimizer) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(config, model, result, with_optimizer).dump(1) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace t3vae::cli
