#include "t3vae/eval.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"

namespace t3vae {

std::string MmdReport::to_json() const {
  nlohmann::ordered_json j;
  j["region"] = region;
  j["empty"] = empty;
  j["statistic"] = statistic;
  j["p_value"] = p_value;
  j["bandwidth"] = bandwidth;
  j["n_bootstrap"] = n_bootstrap;
  j["sample_size"] = sample_size;
  j["rows_generated"] = rows_a;
  j["rows_reference"] = rows_b;
  return j.dump();
}

double median_bandwidth(const Batch& a, const Batch& b) {
  const Eigen::Index total = a.rows() + b.rows();
  const Eigen::Index take = std::min<Eigen::Index>(total, 1000);
  Batch pooled(take, a.cols());
  for (Eigen::Index i = 0; i < take; ++i) {
    const Eigen::Index src = i * total / take;
    pooled.row(i) = src < a.rows() ? a.row(src) : b.row(src - a.rows());
  }
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(take * (take - 1) / 2));
  for (Eigen::Index i = 0; i < take; ++i)
    for (Eigen::Index j = i + 1; j < take; ++j) dist.push_back((pooled.row(i) - pooled.row(j)).norm());
  if (dist.empty()) return 1.0;
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid > 0.0 ? *mid : 1.0;
}

namespace {

struct KernelEval {
  const Batch& pooled;
  double inv_two_h2;
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return std::exp(-(pooled.row(i) - pooled.row(j)).squaredNorm() * inv_two_h2);
  }
};

// rows [0, half) of `order` form group a, [half, 2 half) group b.
double linear_stat(const KernelEval& k, const std::vector<Eigen::Index>& order, Eigen::Index half) {
  const Eigen::Index pairs = half / 2;
  double acc = 0.0;
  for (Eigen::Index p = 0; p < pairs; ++p) {
    const Eigen::Index x1 = order[2 * p], x2 = order[2 * p + 1];
    const Eigen::Index y1 = order[half + 2 * p], y2 = order[half + 2 * p + 1];
    acc += k(x1, x2) + k(y1, y2) - k(x1, y2) - k(x2, y1);
  }
  return acc / static_cast<double>(pairs);
}

void shuffle(std::vector<Eigen::Index>& v, Rng& rng) {
  for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
}

Batch subsample(const Batch& data, Eigen::Index count, Rng& rng) {
  if (count == data.rows()) return data;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(data.rows() - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return gather_rows(data, idx);
}

}  // namespace

double mmd_linear_statistic(const Batch& a, const Batch& b, double bandwidth) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("mmd_linear_statistic: shape mismatch");
  if (a.rows() < 2) throw ContractError("mmd_linear_statistic: need at least 2 rows");
  Batch pooled(2 * a.rows(), a.cols());
  pooled << a, b;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pooled.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  return linear_stat({pooled, 0.5 / (bandwidth * bandwidth)}, order, a.rows());
}

MmdReport mmd_linear_test(const Batch& a, const Batch& b, Rng& rng, MmdOptions opts) {
  if (a.cols() != b.cols()) throw ContractError("mmd_linear_test: dimension mismatch");
  if (a.rows() < kMinMmdSamples || b.rows() < kMinMmdSamples)
    throw ContractError("mmd_linear_test: at least " + std::to_string(kMinMmdSamples) + " rows per group required");
  if (opts.n_bootstrap < 1) throw ContractError("mmd_linear_test: n_bootstrap must be positive");
  Eigen::Index size = std::min({a.rows(), b.rows(), opts.max_samples});
  size -= size % 2;

  const Batch sa = subsample(a, size, rng);
  const Batch sb = subsample(b, size, rng);
  MmdReport r;
  r.rows_a = a.rows();
  r.rows_b = b.rows();
  r.sample_size = size;
  r.n_bootstrap = opts.n_bootstrap;
  r.bandwidth = median_bandwidth(sa, sb);

  Batch pooled(2 * size, a.cols());
  pooled << sa, sb;
  const KernelEval k{pooled, 0.5 / (r.bandwidth * r.bandwidth)};
  std::vector<Eigen::Index> order(static_cast<std::size_t>(2 * size));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  r.statistic = linear_stat(k, order, size);

  long exceed = 0;
  for (int rep = 0; rep < opts.n_bootstrap; ++rep) {
    shuffle(order, rng);
    if (linear_stat(k, order, size) >= r.statistic) ++exceed;
  }
  r.p_value = static_cast<double>(exceed) / opts.n_bootstrap;
  return r;
}

std::string region_name(Region r) {
  switch (r) {
    case Region::full: return "full";
    case Region::left: return "left";
    case Region::right: return "right";
    case Region::tails: return "tails";
  }
  return "full";
}

Region parse_region(const std::string& name) {
  if (name == "full") return Region::full;
  if (name == "left") return Region::left;
  if (name == "right") return Region::right;
  if (name == "tails") return Region::tails;
  throw ConfigError("unknown region '" + name + "' (expected full, left, right or tails)");
}

TailSpec default_tail_spec(Region r, Eigen::Index dim) { return {r, dim >= 2 ? 10.0 : 6.0}; }

bool in_region(const Eigen::Ref<const Eigen::RowVectorXd>& row, const TailSpec& spec) {
  if (spec.region == Region::full) return true;
  const double x = row(0);
  const double size = row.size() >= 2 ? row.norm() : std::abs(x);
  if (!(size > spec.threshold)) return false;
  switch (spec.region) {
    case Region::left: return x < 0.0;
    case Region::right: return x > 0.0;
    default: return true;
  }
}

Batch tail_filter(const Batch& data, const TailSpec& spec) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    if (in_region(data.row(r), spec)) keep.push_back(r);
  return gather_rows(data, keep);
}

MmdReport mmd_region_test(const Batch& generated, const Batch& reference, const TailSpec& spec, Rng& rng,
                          MmdOptions opts) {
  const Batch a = tail_filter(generated, spec);
  const Batch b = tail_filter(reference, spec);
  if (a.rows() < kMinMmdSamples || b.rows() < kMinMmdSamples) {
    MmdReport r;
    r.region = region_name(spec.region);
    r.empty = true;
    r.rows_a = a.rows();
    r.rows_b = b.rows();
    r.n_bootstrap = 0;
    r.p_value = 1.0;
    return r;
  }
  MmdReport r = mmd_linear_test(a, b, rng, opts);
  r.region = region_name(spec.region);
  return r;
}

long Histogram::total() const {
  long t = underflow + overflow;
  for (const auto& b : bins) t += b.count;
  return t;
}

Histogram log_histogram(const Batch& data, int bins, double lower, double upper) {
  if (bins < 2) throw ContractError("log_histogram: at least 2 bins required");
  if (!(upper > lower)) throw ContractError("log_histogram: empty range");
  Histogram h;
  h.lower = lower;
  h.upper = upper;
  const double width = (upper - lower) / bins;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const double x = data(r, 0);
    if (x < lower) {
      ++h.underflow;
    } else if (x >= upper) {
      ++h.overflow;
    } else {
      const auto i = std::min<long>(bins - 1, static_cast<long>((x - lower) / width));
      ++counts[static_cast<std::size_t>(i)];
    }
  }
  const double n = static_cast<double>(data.rows());
  for (int i = 0; i < bins; ++i) {
    const long c = counts[static_cast<std::size_t>(i)];
    h.bins.push_back({lower + (i + 0.5) * width, c, c > 0 ? std::log10(c / (n * width)) : -INFINITY});
  }
  return h;
}

void write_histogram_csv(const std::string& path, const Histogram& h) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "bin_center,count,log10_density\n";
  for (const auto& b : h.bins)
    out << format_double(b.center) << ',' << b.count << ',' << format_double(b.log10_density) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

double ks_critical(Eigen::Index n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

Eigen::Index count_abs_greater(const Batch& data, double threshold) {
  Eigen::Index c = 0;
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    if (std::abs(data(r, 0)) > threshold) ++c;
  return c;
}

}  // namespace t3vae
