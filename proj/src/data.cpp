#include "t3vae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "t3vae/errors.hpp"
#include "t3vae/special.hpp"

namespace t3vae {

void MixtureSpec::validate() const {
  if (components.empty()) throw ContractError("MixtureSpec: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw DomainError("MixtureSpec: weights must be positive");
    if (!(c.scale > 0.0) || !(c.df > 0.0)) throw DomainError("MixtureSpec: scale and df must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("MixtureSpec: weights must sum to 1");
}

double MixtureSpec::log_pdf(double x) const {
  double best = -INFINITY;
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& c : components) {
    const double u = (x - c.location) / c.scale;
    const double lp = std::log(c.weight) + log_norm_const(c.df, 1) - std::log(c.scale) -
                      0.5 * (c.df + 1.0) * std::log1p(u * u / c.df);
    terms.push_back(lp);
    best = std::max(best, lp);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

double MixtureSpec::pdf(double x) const { return std::exp(log_pdf(x)); }

double MixtureSpec::survival(double x) const {
  double s = 0.0;
  for (const auto& c : components) s += c.weight * special::student_t_cdf(-(x - c.location) / c.scale, c.df);
  return s;
}

MixtureSpec univariate_mixture() { return {{{0.6, -2.0, 1.0, 5.0}, {0.4, 2.0, 1.0, 5.0}}}; }

MixtureSpec bivariate_x_mixture() { return {{{0.7, -2.0, 2.0, 5.0}, {0.3, 2.0, 2.0, 5.0}}}; }

LabeledBatch sample_mixture(const MixtureSpec& spec, Eigen::Index count, Rng& rng) {
  spec.validate();
  if (count < 1) throw ContractError("sample_mixture: count must be positive");
  LabeledBatch out{Batch(count, 1), std::vector<int>(static_cast<std::size_t>(count))};
  for (Eigen::Index i = 0; i < count; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double cum = spec.components[0].weight;
    while (u > cum && k + 1 < spec.components.size()) cum += spec.components[++k].weight;
    const auto& c = spec.components[k];
    const double t = rng.normal() / std::sqrt(rng.chi_squared(c.df) / c.df);
    out.data(i, 0) = c.location + c.scale * t;
    out.component[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return out;
}

Batch gen_univariate(Eigen::Index count, Rng& rng) { return sample_mixture(univariate_mixture(), count, rng).data; }

Batch gen_univariate(Eigen::Index count, std::uint64_t seed) {
  Rng rng(seed);
  return gen_univariate(count, rng);
}

double bivariate_curve(double x) { return x + 2.0 * std::sin(special::kPi * x / 4.0); }

LabeledBatch gen_bivariate_labeled(Eigen::Index count, Rng& rng, BivariateOptions opts) {
  LabeledBatch xs = sample_mixture(bivariate_x_mixture(), count, rng);
  LabeledBatch out{Batch(count, 2), std::move(xs.component)};
  const TParams noise(Vector::Zero(2), ScaleMatrix::identity(2), kBivariateNoiseDf);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double x = xs.data(i, 0);
    out.data(i, 0) = x;
    out.data(i, 1) = bivariate_curve(x);
  }
  if (opts.noise) out.data += sample(noise, count, rng);
  return out;
}

Batch gen_bivariate(Eigen::Index count, Rng& rng, BivariateOptions opts) {
  return gen_bivariate_labeled(count, rng, opts).data;
}

Batch gen_bivariate(Eigen::Index count, std::uint64_t seed, BivariateOptions opts) {
  Rng rng(seed);
  return gen_bivariate(count, rng, opts);
}

SplitSizes preset_sizes(const std::string& name) {
  if (name == "paper") return {200000, 200000, 500000};
  if (name == "quick") return {20000, 20000, 50000};
  throw ConfigError("unknown split preset '" + name + "' (expected paper or quick)");
}

SplitSizes split_sizes(Eigen::Index rows, const std::vector<double>& ratios) {
  if (ratios.size() != 3) throw ContractError("split: exactly three ratios required");
  for (double r : ratios)
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("split: ratios must be positive");
  if (rows < 0) throw ContractError("split: negative row count");
  const double total = ratios[0] + ratios[1] + ratios[2];
  Eigen::Index sizes[3];
  double rem[3];
  Eigen::Index used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(rows) * ratios[i] / total;
    sizes[i] = static_cast<Eigen::Index>(std::floor(exact));
    rem[i] = exact - static_cast<double>(sizes[i]);
    used += sizes[i];
  }
  int order[3] = {0, 1, 2};
  std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b]; });
  for (int j = 0; used < rows; ++j, ++used) ++sizes[order[j % 3]];
  return {sizes[0], sizes[1], sizes[2]};
}

namespace {

std::vector<Eigen::Index> permutation(Eigen::Index rows, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = rows - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace

Batch gather_rows(const Batch& data, const std::vector<Eigen::Index>& rows) {
  Batch out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.row(rows[i]);
  return out;
}

Split split(const Batch& data, const std::vector<double>& ratios, Rng& rng) {
  const SplitSizes s = split_sizes(data.rows(), ratios);
  const auto idx = permutation(data.rows(), rng);
  auto take = [&](Eigen::Index start, Eigen::Index count) {
    return gather_rows(data, std::vector<Eigen::Index>(idx.begin() + start, idx.begin() + start + count));
  };
  return {take(0, s.train), take(s.train, s.val), take(s.train + s.val, s.test)};
}

std::vector<std::vector<Eigen::Index>> shuffled_batches(Eigen::Index rows, Eigen::Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ContractError("shuffled_batches: batch_size must be positive");
  const auto idx = permutation(rows, rng);
  std::vector<std::vector<Eigen::Index>> out;
  for (Eigen::Index start = 0; start < rows; start += batch_size) {
    const Eigen::Index end = std::min(rows, start + batch_size);
    out.emplace_back(idx.begin() + start, idx.begin() + end);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const Batch& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (Eigen::Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << 'x' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << format_double(data(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Batch read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing header row", line_no);
  const auto header = split_fields(trim(line));
  if (header.empty()) throw ParseError("empty header row", line_no);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (trim(header[c]) != "x" + std::to_string(c))
      throw ParseError("header column " + std::to_string(c) + " should be x" + std::to_string(c), line_no);
  const std::size_t cols = header.size();

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t);
    if (fields.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()), line_no);
    for (const auto& f : fields) {
      const std::string s = trim(f);
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("malformed number '" + s + "'", line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite value '" + s + "'", line_no);
      values.push_back(v);
    }
    ++rows;
  }
  Batch out(rows, static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = values[static_cast<std::size_t>(r) * cols + c];
  return out;
}

}  // namespace t3vae
