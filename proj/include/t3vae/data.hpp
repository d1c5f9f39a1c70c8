#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t3vae/rng.hpp"
#include "t3vae/tdist.hpp"

namespace t3vae {

struct MixtureComponent {
  double weight;
  double location;
  double scale;
  double df;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  void validate() const;
  double pdf(double x) const;
  double log_pdf(double x) const;
  // P(X > x)
  double survival(double x) const;
};

// 0.6 t1(-2, 1, 5) + 0.4 t1(2, 1, 5)
MixtureSpec univariate_mixture();
// x-marginal of the bivariate set: 0.7 t1(-2, 2^2, 5) + 0.3 t1(2, 2^2, 5)
MixtureSpec bivariate_x_mixture();

inline constexpr double kBivariateNoiseDf = 6.0;

struct LabeledBatch {
  Batch data;
  std::vector<int> component;
};

LabeledBatch sample_mixture(const MixtureSpec& spec, Eigen::Index count, Rng& rng);

Batch gen_univariate(Eigen::Index count, Rng& rng);
Batch gen_univariate(Eigen::Index count, std::uint64_t seed);

struct BivariateOptions {
  bool noise = true;
};

// x from the mixture, y = x + 2 sin(pi x / 4), then t2(0, I, 6) noise on (x, y).
LabeledBatch gen_bivariate_labeled(Eigen::Index count, Rng& rng, BivariateOptions opts = {});
Batch gen_bivariate(Eigen::Index count, Rng& rng, BivariateOptions opts = {});
Batch gen_bivariate(Eigen::Index count, std::uint64_t seed, BivariateOptions opts = {});

double bivariate_curve(double x);

struct SplitSizes {
  Eigen::Index train;
  Eigen::Index val;
  Eigen::Index test;
  Eigen::Index total() const noexcept { return train + val + test; }
};

SplitSizes preset_sizes(const std::string& name);  // "paper" or "quick"

// Largest-remainder apportionment of `rows` by three positive ratios.
SplitSizes split_sizes(Eigen::Index rows, const std::vector<double>& ratios);

struct Split {
  Batch train;
  Batch val;
  Batch test;
};

Split split(const Batch& data, const std::vector<double>& ratios, Rng& rng);

// Shuffled mini-batch row indices covering [0, rows).
std::vector<std::vector<Eigen::Index>> shuffled_batches(Eigen::Index rows, Eigen::Index batch_size, Rng& rng);
Batch gather_rows(const Batch& data, const std::vector<Eigen::Index>& rows);

void write_csv(const std::string& path, const Batch& data);
Batch read_csv(const std::string& path);
std::string format_double(double v);

}  // namespace t3vae
