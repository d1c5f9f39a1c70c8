#pragma once

#include <cstdint>
#include <random>

namespace t3vae {

// Seeded random stream. Independent streams are derived from (seed, stream)
// pairs so that parallel workers never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Gamma(shape, scale) for any real shape > 0.
  double gamma(double shape, double scale = 1.0);
  double chi_squared(double df);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Rng split(std::uint64_t stream) const { return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + stream + 1); }
  std::uint64_t seed() const noexcept { return seed_; }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace t3vae
