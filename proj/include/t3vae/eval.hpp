#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t3vae/rng.hpp"
#include "t3vae/tdist.hpp"

namespace t3vae {

struct MmdReport {
  double statistic = 0.0;
  double p_value = 1.0;
  double bandwidth = 1.0;
  int n_bootstrap = 0;
  std::string region = "full";
  Eigen::Index sample_size = 0;  // per group, after matching
  Eigen::Index rows_a = 0;       // rows in the region before matching
  Eigen::Index rows_b = 0;
  bool empty = false;            // too few rows in the region to test

  std::string to_json() const;
};

struct MmdOptions {
  int n_bootstrap = 1000;
  Eigen::Index max_samples = 100000;
};

inline constexpr Eigen::Index kMinMmdSamples = 4;

// Median pairwise distance over a deterministic strided subset (<= 1000 rows) of the pooled sample.
double median_bandwidth(const Batch& a, const Batch& b);

// Linear-time MMD with pairs (2i, 2i+1) and a Gaussian kernel of the given bandwidth.
double mmd_linear_statistic(const Batch& a, const Batch& b, double bandwidth);

// Groups are subsampled to a common even size, then the null is simulated by
// permuting the pooled rows. p = fraction of bootstrap statistics >= observed.
MmdReport mmd_linear_test(const Batch& a, const Batch& b, Rng& rng, MmdOptions opts = {});

enum class Region { full, left, right, tails };

struct TailSpec {
  Region region = Region::full;
  double threshold = 6.0;  // |x| > t in 1-d, radius > t in 2-d
};

std::string region_name(Region r);
Region parse_region(const std::string& name);
// 1-d: abs_gt(6), 2-d: radius_gt(10), matching the synthetic experiments.
TailSpec default_tail_spec(Region r, Eigen::Index dim);

bool in_region(const Eigen::Ref<const Eigen::RowVectorXd>& row, const TailSpec& spec);
Batch tail_filter(const Batch& data, const TailSpec& spec);

MmdReport mmd_region_test(const Batch& generated, const Batch& reference, const TailSpec& spec, Rng& rng,
                          MmdOptions opts = {});

struct HistogramBin {
  double center;
  long count;
  double log10_density;  // -inf for empty bins
};

struct Histogram {
  std::vector<HistogramBin> bins;
  double lower;
  double upper;
  long underflow = 0;
  long overflow = 0;
  long total() const;
};

// First column only; density is count / (rows * width).
Histogram log_histogram(const Batch& data, int bins, double lower, double upper);
void write_histogram_csv(const std::string& path, const Histogram& h);

// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf);
// Asymptotic critical value sqrt(-log(alpha/2)/2) / sqrt(n).
double ks_critical(Eigen::Index n, double alpha);

Eigen::Index count_abs_greater(const Batch& data, double threshold);

}  // namespace t3vae

#include <algorithm>

template <typename Cdf>
double t3vae::ks_statistic(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}
