#include "t3vae/cli/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"

namespace t3vae::cli {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "model",   "nu",         "beta",         "n",          "m",          "m1",         "m2",
      "sigma",   "sigma_z",    "sigma_x",      "hidden_sizes", "activation", "lr",       "weight_decay",
      "batch_size", "max_epochs", "patience",  "mc_samples", "seed",       "dataset",    "split"};
  return keys;
}

double get_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(std::string("'") + key + "' must be finite");
  return d;
}

int get_int(const json& j, const char* key, int min_value) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  const auto i = v.get<long long>();
  if (i < min_value || i > 1'000'000'000) throw ConfigError(std::string("'") + key + "' is out of range");
  return static_cast<int>(i);
}

double positive(double v, const char* key) {
  if (!(v > 0.0)) throw ConfigError(std::string("'") + key + "' must be positive");
  return v;
}

std::string get_string(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::uint64_t parse_seed(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ConfigError("seed out of range: '" + text + "'");
  }
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");

  RunConfig c;
  if (!j.contains("model")) throw ConfigError("config requires 'model'");
  c.model = parse_family(get_string(j, "model"));
  const bool hier = is_hierarchical(c.model);
  const bool heavy = c.model == Family::t3vae || c.model == Family::t3hvae;

  if (j.contains("nu")) {
    if (!heavy) throw ConfigError("'nu' only applies to t3vae and t3hvae");
    c.nu = get_number(j, "nu");
    if (!(*c.nu > 2.0)) throw ConfigError("'nu' must exceed 2");
  } else if (heavy) {
    throw ConfigError("'nu' is required for " + family_name(c.model));
  }
  if (j.contains("beta")) {
    if (c.model != Family::beta_vae) throw ConfigError("'beta' only applies to beta_vae");
    c.beta = get_number(j, "beta");
    if (*c.beta < 0.0) throw ConfigError("'beta' must be non-negative");
  }
  if (j.contains("n")) c.n = get_int(j, "n", 1);
  if (j.contains("m") && j.contains("m1")) throw ConfigError("give either 'm' or 'm1', not both");
  if (j.contains("m")) c.m = get_int(j, "m", 1);
  if (j.contains("m1")) {
    if (!hier) throw ConfigError("'m1' only applies to hierarchical models");
    c.m = get_int(j, "m1", 1);
  }
  if (j.contains("m2")) {
    if (!hier) throw ConfigError("'m2' only applies to hierarchical models");
    c.m2 = get_int(j, "m2", 1);
  }
  if (j.contains("sigma")) c.sigma = positive(get_number(j, "sigma"), "sigma");
  for (const char* key : {"sigma_z", "sigma_x"}) {
    if (!j.contains(key)) continue;
    if (!hier) throw ConfigError(std::string("'") + key + "' only applies to hierarchical models");
    (std::string(key) == "sigma_z" ? c.sigma_z : c.sigma_x) = positive(get_number(j, key), key);
  }
  if (hier && c.sigma && c.sigma_x) throw ConfigError("give either 'sigma' or 'sigma_x', not both");
  if (j.contains("hidden_sizes")) {
    const auto& h = j.at("hidden_sizes");
    if (!h.is_array()) throw ConfigError("'hidden_sizes' must be an array of integers");
    c.hidden_sizes.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100000)
        throw ConfigError("'hidden_sizes' entries must be positive integers");
      c.hidden_sizes.push_back(v.get<int>());
    }
  }
  if (j.contains("activation")) {
    c.activation = get_string(j, "activation");
    if (c.activation != "leaky_relu") throw ConfigError("only 'leaky_relu' activation is supported");
  }
  if (j.contains("lr")) c.lr = positive(get_number(j, "lr"), "lr");
  if (j.contains("weight_decay")) {
    c.weight_decay = get_number(j, "weight_decay");
    if (c.weight_decay < 0.0) throw ConfigError("'weight_decay' must be non-negative");
  }
  if (j.contains("batch_size")) c.batch_size = get_int(j, "batch_size", 1);
  if (j.contains("max_epochs")) c.max_epochs = get_int(j, "max_epochs", 1);
  if (j.contains("patience")) c.patience = get_int(j, "patience", 1);
  if (j.contains("mc_samples")) c.mc_samples = get_int(j, "mc_samples", 1);
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("'seed' must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("dataset")) {
    c.dataset = get_string(j, "dataset");
    if (c.dataset.empty()) throw ConfigError("'dataset' must not be empty");
  }
  if (j.contains("split")) {
    c.split = get_string(j, "split");
    preset_sizes(c.split);
  }
  if (c.n && c.dataset_dim() && *c.n != *c.dataset_dim())
    throw ConfigError("'n' does not match the " + c.dataset + " dataset");
  return c;
}

json RunConfig::to_json() const {
  const bool hier = is_hierarchical(model);
  json j;
  j["model"] = family_name(model);
  if (nu) j["nu"] = *nu;
  if (beta) j["beta"] = *beta;
  if (n) j["n"] = *n;
  if (m) j[hier ? "m1" : "m"] = *m;
  if (m2) j["m2"] = *m2;
  if (sigma) j["sigma"] = *sigma;
  if (sigma_z) j["sigma_z"] = *sigma_z;
  if (sigma_x) j["sigma_x"] = *sigma_x;
  j["hidden_sizes"] = hidden_sizes;
  j["activation"] = activation;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["mc_samples"] = mc_samples;
  j["seed"] = seed;
  j["dataset"] = dataset;
  j["split"] = split;
  return j;
}

std::optional<int> RunConfig::dataset_dim() const {
  if (dataset == "univariate") return 1;
  if (dataset == "bivariate") return 2;
  return std::nullopt;
}

ModelSpec RunConfig::model_spec(int data_dim) const {
  if (n && *n != data_dim) throw ConfigError("config 'n' differs from the data width");
  ModelSpec s;
  s.family = model;
  s.n = data_dim;
  s.m = m.value_or(data_dim);
  s.m2 = m2.value_or(0);
  if (nu) s.nu = *nu;
  s.beta = beta.value_or(1.0);
  s.sigma = sigma_x.value_or(sigma.value_or(1.0));
  s.sigma_z = sigma_z.value_or(1.0);
  s.hidden = hidden_sizes;
  return s;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.adam.lr = lr;
  o.adam.weight_decay = weight_decay;
  o.batch_size = batch_size;
  o.max_epochs = max_epochs;
  o.patience = patience;
  o.mc_samples = mc_samples;
  o.seed = seed;
  return o;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* s = std::getenv("T3_SEED"); s && *s) cfg.seed = parse_seed(s);
}

}  // namespace t3vae::cli
