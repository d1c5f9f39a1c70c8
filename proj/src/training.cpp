#include "t3vae/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"

namespace t3vae {

std::string family_name(Family f) {
  switch (f) {
    case Family::t3vae: return "t3vae";
    case Family::gaussian_vae: return "gaussian_vae";
    case Family::beta_vae: return "beta_vae";
    case Family::t3hvae: return "t3hvae";
    case Family::gaussian_hvae: return "gaussian_hvae";
  }
  return "gaussian_vae";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::t3vae, Family::gaussian_vae, Family::beta_vae, Family::t3hvae, Family::gaussian_hvae})
    if (family_name(f) == name) return f;
  throw ConfigError("unknown model '" + name + "'");
}

bool is_hierarchical(Family f) { return f == Family::t3hvae || f == Family::gaussian_hvae; }

ModelConfig ModelSpec::flat_config() const {
  ModelConfig c;
  c.n = n;
  c.m = m;
  c.sigma = sigma;
  switch (family) {
    case Family::t3vae:
      c.kind = ModelKind::t3vae;
      c.nu = nu;
      break;
    case Family::gaussian_vae:
      c.kind = ModelKind::gaussian_vae;
      c.beta = 1.0;
      break;
    case Family::beta_vae:
      c.kind = ModelKind::beta_vae;
      c.beta = beta;
      break;
    default: throw ContractError("flat_config: hierarchical family");
  }
  c.validate();
  return c;
}

HierConfig ModelSpec::hier_config() const {
  if (!is_hierarchical(family)) throw ContractError("hier_config: flat family");
  HierConfig c;
  c.n = n;
  c.m1 = m;
  c.m2 = m2 > 0 ? m2 : std::max(1, m / 2);
  c.sigma_x = sigma;
  c.sigma_z = sigma_z;
  c.kind = family == Family::t3hvae ? HierKind::t3hvae : HierKind::gaussian_hvae;
  if (c.heavy_tailed()) c.nu = nu;
  c.validate();
  return c;
}

std::vector<nn::Mlp*> Model::mutable_networks() {
  std::vector<nn::Mlp*> out;
  for (const auto& [name, net] : networks()) out.push_back(const_cast<nn::Mlp*>(net));
  return out;
}

std::vector<ad::Tensor> Model::parameters() const {
  std::vector<ad::Tensor> out;
  for (const auto& [name, net] : networks())
    for (const auto& p : net->parameters()) out.push_back(p);
  return out;
}

void Model::copy_parameters_from(const Model& other) {
  const auto dst = parameters();
  const auto src = other.parameters();
  if (dst.size() != src.size()) throw ContractError("copy_parameters_from: architecture mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].rows() != src[i].rows() || dst[i].cols() != src[i].cols())
      throw ContractError("copy_parameters_from: shape mismatch");
    ad::Tensor(dst[i]).mutable_value() = src[i].value();
  }
}

namespace {

class FlatVae final : public Model {
 public:
  FlatVae(const ModelSpec& spec, Rng& rng) : Model(spec), cfg_(spec.flat_config()) {
    if (cfg_.heavy_tailed()) k_ = derive_constants(cfg_);
    encoder_ = nn::Mlp(cfg_.n, spec.hidden, 2 * cfg_.m, rng);
    decoder_ = nn::Mlp(cfg_.m, spec.hidden, cfg_.n, rng);
  }

  LossValue loss(const Matrix& x, int mc_samples, Rng& rng) const override {
    const ad::Tensor xt = ad::Tensor::constant(x);
    const ad::Tensor h = encoder_.forward(xt);
    const EncoderTensors enc{ad::columns(h, 0, cfg_.m), ad::columns(h, cfg_.m, cfg_.m)};
    const DecoderFn decode = [this](const ad::Tensor& z) { return decoder_.forward(z); };
    if (cfg_.heavy_tailed()) return gamma_loss(xt, enc, decode, cfg_, k_, mc_samples, rng);
    return elbo_loss(xt, enc, decode, cfg_, mc_samples, rng);
  }

  Batch generate(Eigen::Index count, Rng& rng, DecoderOutput output) const override {
    return t3vae::generate(count, cfg_, k_, [this](const Matrix& z) { return decoder_.predict(z); }, rng, output);
  }

  std::vector<std::pair<std::string, const nn::Mlp*>> networks() const override {
    return {{"encoder", &encoder_}, {"decoder", &decoder_}};
  }

  std::unique_ptr<Model> clone() const override {
    auto out = std::unique_ptr<FlatVae>(new FlatVae(*this));
    out->encoder_ = encoder_.clone();
    out->decoder_ = decoder_.clone();
    return out;
  }

  std::vector<std::pair<std::string, double>> generation_metadata() const override {
    if (!cfg_.heavy_tailed())
      return {{"latent_df", kGaussianDf}, {"latent_scale", 1.0}, {"decoder_df", kGaussianDf}};
    return {{"latent_df", cfg_.nu + cfg_.n},
            {"latent_scale", k_.tau2},
            {"decoder_df", cfg_.nu + cfg_.m},
            {"gamma", k_.gamma},
            {"alpha", k_.alpha}};
  }

 private:
  FlatVae(const FlatVae&) = default;

  ModelConfig cfg_;
  DerivedConstants k_{0.0, 1.0, 1.0, 1.0, 1.0};
  nn::Mlp encoder_;
  nn::Mlp decoder_;
};

class HierVae final : public Model {
 public:
  HierVae(const ModelSpec& spec, Rng& rng) : Model(spec), cfg_(spec.hier_config()) {
    if (cfg_.heavy_tailed()) k_ = hier_constants(cfg_);
    encoder1_ = nn::Mlp(cfg_.n, spec.hidden, 2 * cfg_.m1, rng);
    encoder2_ = nn::Mlp(cfg_.n + cfg_.m1, spec.hidden, 2 * cfg_.m2, rng);
    prior_ = nn::Mlp(cfg_.m1, spec.hidden, cfg_.m2, rng);
    decoder_ = nn::Mlp(cfg_.m1 + cfg_.m2, spec.hidden, cfg_.n, rng);
  }

  LossValue loss(const Matrix& x, int mc_samples, Rng& rng) const override {
    const ad::Tensor xt = ad::Tensor::constant(x);
    const ad::Tensor h = encoder1_.forward(xt);
    const HierLevel1 l1{ad::columns(h, 0, cfg_.m1), ad::columns(h, cfg_.m1, cfg_.m1)};
    HierNetworks nets;
    nets.encode2 = [this, &xt](const ad::Tensor& z1) {
      const ad::Tensor h2 = encoder2_.forward(ad::concat_columns(xt, z1));
      return std::make_pair(ad::columns(h2, 0, cfg_.m2), ad::columns(h2, cfg_.m2, cfg_.m2));
    };
    nets.prior_mean = [this](const ad::Tensor& z1) { return prior_.forward(z1); };
    nets.decode = [this](const ad::Tensor& z1, const ad::Tensor& z2) {
      return decoder_.forward(ad::concat_columns(z1, z2));
    };
    const HierLossValue v = cfg_.heavy_tailed() ? hier_gamma_loss(xt, l1, nets, cfg_, k_, mc_samples, rng)
                                                : hier_elbo_loss(xt, l1, nets, cfg_, mc_samples, rng);
    return {v.total, v.reconstruction, v.regularizer};
  }

  Batch generate(Eigen::Index count, Rng& rng, DecoderOutput output) const override {
    return hier_generate(
        count, cfg_, [this](const Matrix& z1) { return prior_.predict(z1); },
        [this](const Matrix& z1, const Matrix& z2) {
          Matrix in(z1.rows(), z1.cols() + z2.cols());
          in << z1, z2;
          return decoder_.predict(in);
        },
        rng, output);
  }

  std::vector<std::pair<std::string, const nn::Mlp*>> networks() const override {
    return {{"encoder1", &encoder1_}, {"encoder2", &encoder2_}, {"prior", &prior_}, {"decoder", &decoder_}};
  }

  std::unique_ptr<Model> clone() const override {
    auto out = std::unique_ptr<HierVae>(new HierVae(*this));
    out->encoder1_ = encoder1_.clone();
    out->encoder2_ = encoder2_.clone();
    out->prior_ = prior_.clone();
    out->decoder_ = decoder_.clone();
    return out;
  }

  std::vector<std::pair<std::string, double>> generation_metadata() const override {
    const double df = cfg_.heavy_tailed() ? cfg_.nu : kGaussianDf;
    return {{"latent_df", df}, {"latent_scale", 1.0}, {"m2", static_cast<double>(cfg_.m2)}};
  }

 private:
  HierVae(const HierVae&) = default;

  HierConfig cfg_;
  HierConstants k_{1.0, 1.0};
  nn::Mlp encoder1_;
  nn::Mlp encoder2_;
  nn::Mlp prior_;
  nn::Mlp decoder_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ModelSpec& spec, Rng& rng) {
  if (spec.n < 1 || spec.m < 1) throw ConfigError("model dimensions must be positive");
  for (int h : spec.hidden)
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  if (is_hierarchical(spec.family)) return std::make_unique<HierVae>(spec, rng);
  return std::make_unique<FlatVae>(spec, rng);
}

std::uint64_t validation_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

double evaluate_loss(const Model& model, const Batch& data, int mc_samples, std::uint64_t val_seed,
                     Eigen::Index eval_batch) {
  if (data.rows() == 0) throw ContractError("evaluate_loss: empty data");
  Rng rng(val_seed);
  double acc = 0.0;
  for (Eigen::Index start = 0; start < data.rows(); start += eval_batch) {
    const Eigen::Index count = std::min(eval_batch, data.rows() - start);
    const LossValue v = model.loss(data.middleRows(start, count), mc_samples, rng);
    acc += v.total.item() * static_cast<double>(count);
  }
  return acc / static_cast<double>(data.rows());
}

TrainResult train(Model& model, const Batch& train_data, const Batch& val_data, const TrainOptions& opts,
                  const EpochCallback& on_epoch) {
  if (train_data.rows() == 0 || val_data.rows() == 0) throw ContractError("train: empty split");
  if (train_data.cols() != model.spec().n || val_data.cols() != model.spec().n)
    throw ContractError("train: data width differs from model n");
  if (opts.batch_size < 1 || opts.max_epochs < 1 || opts.patience < 1 || opts.mc_samples < 1)
    throw ConfigError("train: batch_size, max_epochs, patience and mc_samples must be positive");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  Rng rng(opts.seed, 1);
  nn::Adam adam(model.parameters(), opts.adam);
  std::unique_ptr<Model> best = model.clone();

  TrainResult result;
  result.val_seed = validation_seed(opts.seed);
  result.best_val = std::numeric_limits<double>::infinity();
  long batch_index = 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    double train_acc = 0.0;
    for (const auto& rows : shuffled_batches(train_data.rows(), opts.batch_size, rng)) {
      const Batch xb = gather_rows(train_data, rows);
      adam.zero_grad();
      const LossValue v = model.loss(xb, opts.mc_samples, rng);
      const double value = v.total.item();
      if (!std::isfinite(value)) throw TrainingDivergence("non-finite training loss", batch_index);
      v.total.backward();
      for (const auto& p : model.parameters())
        if (!p.grad().allFinite()) throw TrainingDivergence("non-finite gradient", batch_index);
      adam.step();
      train_acc += value * static_cast<double>(rows.size());
      ++batch_index;
    }
    const double val = evaluate_loss(model, val_data, opts.mc_samples, result.val_seed, opts.eval_batch);
    if (!std::isfinite(val)) throw TrainingDivergence("non-finite validation loss", batch_index);
    const double wall = std::chrono::duration<double>(clock::now() - start).count();
    result.log.push_back({epoch, train_acc / static_cast<double>(train_data.rows()), val, wall});
    if (on_epoch) on_epoch(result.log.back());

    if (val < result.best_val) {
      result.best_val = val;
      result.best_epoch = epoch;
      best->copy_parameters_from(model);
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      result.stopped_early = true;
      break;
    }
  }
  model.copy_parameters_from(*best);
  result.optimizer_steps = adam.steps();
  result.adam_m = adam.first_moments();
  result.adam_v = adam.second_moments();
  return result;
}

}  // namespace t3vae
