#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "oracles/oracles.hpp"
#include "t3vae/errors.hpp"
#include "t3vae/eval.hpp"
#include "t3vae/nn.hpp"

using namespace t3vae;
using ad::Matrix;
using ad::Tensor;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("linear least squares gradient is analytic") {
  Rng rng(1);
  const Tensor w = Tensor::parameter(random_matrix(3, 2, rng));
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix y = random_matrix(4, 2, rng);
  const Tensor loss = 0.5 * ad::sum(ad::square(ad::matmul(Tensor::constant(x), w) - Tensor::constant(y)));
  loss.backward();
  const Matrix expected = x.transpose() * (x * w.value() - y);
  CHECK((w.grad() - expected).norm() < 1e-13);
}

TEST_CASE("every primitive passes a gradient check") {
  Rng rng(2);
  const Tensor a = Tensor::parameter(random_matrix(3, 4, rng));
  const Tensor b = Tensor::parameter(random_matrix(3, 4, rng));
  const Tensor row = Tensor::parameter(random_matrix(1, 4, rng));
  const Tensor pos = Tensor::parameter(random_matrix(3, 4, rng, 0.5, 2.0));
  const Tensor m = Tensor::parameter(random_matrix(4, 2, rng));
  const std::vector<Tensor> params{a, b, row, pos, m};

  const std::vector<std::pair<std::string, std::function<Tensor()>>> cases{
      {"add/sub/mul", [&] { return ad::sum((a + b) * (a - b) + 0.5 * a * b); }},
      {"broadcast", [&] { return ad::sum(ad::square(a + row) - (b - row)); }},
      {"matmul", [&] { return ad::sum(ad::square(ad::matmul(a, m))); }},
      {"leaky_relu", [&] { return ad::sum(ad::leaky_relu(a * b) * b); }},
      {"exp/log/sqrt", [&] { return ad::sum(ad::exp(0.3 * a) + ad::log(pos) * b + ad::sqrt(pos)); }},
      {"mean/row_sum", [&] { return ad::mean(ad::square(ad::row_sum(a * b) + 1.0)); }},
      {"columns/concat", [&] { return ad::sum(ad::square(ad::concat_columns(ad::columns(a, 1, 2), -b))); }},
      {"scalar ops", [&] { return ad::sum(-(2.0 * a) + 3.0) * ad::mean(pos); }},
  };
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    CHECK(gradcheck::compare(params, f).rel_error < 1e-6);
  }
}

TEST_CASE("leaky relu slope is exactly 0.01") {
  const Tensor x = Tensor::parameter(Matrix::Constant(1, 1, -3.0));
  const Tensor y = ad::sum(ad::leaky_relu(x));
  CHECK(y.item() == -0.03);
  y.backward();
  CHECK(x.grad()(0, 0) == 0.01);
}

TEST_CASE("shared subexpressions accumulate") {
  const Tensor x = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
  const Tensor y = x * x;
  const Tensor z = ad::sum(y * y + y);
  z.backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(4.0 * 8.0 + 4.0));
  x.zero_grad();
  z.backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(36.0));
}

TEST_CASE("shape mismatches throw") {
  const Tensor a = Tensor::constant(Matrix::Zero(2, 3));
  const Tensor b = Tensor::constant(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(a + b, ContractError);
  CHECK_THROWS_AS(ad::matmul(a, a), ContractError);
  CHECK_THROWS_AS(a.backward(), ContractError);
}

TEST_CASE("mlp gradient check") {
  Rng rng(3);
  const nn::Mlp net(3, {5, 4}, 2, rng);
  const Matrix x = random_matrix(6, 3, rng, -2.0, 2.0);
  const auto f = [&] { return ad::mean(ad::square(net.forward(Tensor::constant(x)))); };
  CHECK(gradcheck::compare(net.parameters(), f).rel_error < 1e-6);
  CHECK((net.forward(Tensor::constant(x)).value() - net.predict(x)).norm() < 1e-14);
  CHECK_THROWS_AS(net.forward(Tensor::constant(Matrix::Zero(2, 4))), ContractError);
  const nn::Mlp copy = net.clone();
  CHECK(copy.predict(x) == net.predict(x));
  copy.layers()[0].weight.value();
  CHECK(copy.parameters()[0].node() != net.parameters()[0].node());
}

TEST_CASE("adam first step moves by lr times sign") {
  const Tensor p = Tensor::parameter((Matrix(1, 3) << 1.0, -2.0, 0.5).finished());
  nn::Adam opt({p}, {1e-3, 0.9, 0.999, 1e-8, 0.0});
  opt.zero_grad();
  ad::sum(p * Tensor::constant((Matrix(1, 3) << 3.0, -0.2, 1e-3).finished())).backward();
  opt.step();
  CHECK(p.value()(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
  CHECK(p.value()(0, 1) == doctest::Approx(-2.0 + 1e-3).epsilon(1e-9));
  CHECK(p.value()(0, 2) == doctest::Approx(0.5 - 1e-3).epsilon(1e-7));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam with zero gradient and no decay is a no-op") {
  const Tensor p = Tensor::parameter((Matrix(2, 2) << 1.0, 2.0, 3.0, 4.0).finished());
  const Matrix before = p.value();
  nn::Adam opt({p}, {});
  for (int i = 0; i < 5; ++i) {
    opt.zero_grad();
    ad::sum(0.0 * p).backward();
    opt.step();
  }
  CHECK(p.value() == before);
}

TEST_CASE("pure weight decay drives parameters to zero") {
  const Tensor p = Tensor::parameter((Matrix(1, 2) << 0.05, -0.03).finished());
  nn::Adam opt({p}, {1e-3, 0.9, 0.999, 1e-8, 1e-2});
  for (int i = 0; i < 1000; ++i) {
    opt.zero_grad();
    ad::sum(0.0 * p).backward();
    opt.step();
  }
  CHECK(p.value().norm() < 1e-3);
}

TEST_CASE("t reparametrization") {
  const Tensor mu = Tensor::parameter((Matrix(2, 2) << 0.5, -1.0, 2.0, 0.0).finished());
  const Tensor ls = Tensor::parameter((Matrix(2, 2) << 0.1, -0.3, 0.0, 0.2).finished());
  const Matrix eps = (Matrix(2, 2) << 0.3, -1.2, 0.8, 0.4).finished();
  const double nu = 7.0, n = 3.0;
  const Eigen::VectorXd delta = Eigen::VectorXd::Constant(2, nu + n);
  const Tensor z = nn::reparam_t(mu, ls, nu, eps, delta);
  const Matrix expected = mu.value().array() + std::sqrt(nu / (nu + n)) * ls.value().array().exp() * eps.array();
  CHECK((z.value() - expected).norm() < 1e-15);
  ad::sum(z).backward();
  CHECK(mu.grad() == Matrix::Ones(2, 2));
  CHECK((ls.grad() - (expected - mu.value())).norm() < 1e-15);
}

TEST_CASE("t reparametrization marginal") {
  Rng rng(8);
  const double nu = 6.0, n = 2.0;
  const Tensor mu = Tensor::constant(Matrix::Constant(100000, 1, 0.4));
  const Tensor ls = Tensor::constant(Matrix::Constant(100000, 1, std::log(1.3)));
  const Matrix z = nn::reparam_t(mu, ls, nu, n, rng).value();
  std::vector<double> xs(z.data(), z.data() + z.size());
  // Scale sigma^2 / (1 + n / nu), df nu + n.
  const double s2 = 1.69 / (1.0 + n / nu);
  const double d = ks_statistic(xs, [&](double x) { return oracle::t1_cdf(x, 0.4, s2, nu + n); });
  CHECK(d < ks_critical(100000, 0.001));
}

TEST_CASE("gaussian reparametrization") {
  Rng rng(9);
  const Tensor mu = Tensor::constant(Matrix::Constant(100000, 1, -1.0));
  const Tensor ls = Tensor::constant(Matrix::Constant(100000, 1, std::log(0.5)));
  const Matrix z = nn::reparam_gaussian(mu, ls, rng).value();
  std::vector<double> xs(z.data(), z.data() + z.size());
  const double d = ks_statistic(xs, [](double x) { return oracle::normal_cdf(x, -1.0, 0.5); });
  CHECK(d < ks_critical(100000, 0.001));
}

TEST_CASE("identical seeds give identical training steps") {
  auto run = [] {
    Rng rng(21);
    nn::Mlp net(2, {8}, 1, rng);
    nn::Adam opt(net.parameters(), {1e-2, 0.9, 0.999, 1e-8, 1e-4});
    const Matrix x = random_matrix(16, 2, rng);
    for (int i = 0; i < 20; ++i) {
      opt.zero_grad();
      const Tensor z = nn::reparam_t(net.forward(Tensor::constant(x)), Tensor::constant(Matrix::Zero(16, 1)), 5.0,
                                     1.0, rng);
      ad::mean(ad::square(z)).backward();
      opt.step();
    }
    return net.predict(x);
  };
  CHECK(run() == run());
}
