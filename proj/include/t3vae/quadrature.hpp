#pragma once

#include <functional>
#include <span>
#include <vector>

namespace t3vae::quad {

// One coordinate of an integration box. Infinite bounds are mapped onto a
// finite interval; `center` and `scale` position that map over the bulk of
// the integrand.
struct Range {
  double lower;
  double upper;
  double center = 0.0;
  double scale = 1.0;
};

using Box = std::vector<Range>;

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  long evaluations = 0;
};

struct QuadOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
  int initial_intervals = 8;
};

// Globally adaptive Gauss-Kronrod (7/15) integration over a finite or
// infinite range. Throws OracleFailure if the tolerance is not met.
QuadResult integrate(const std::function<double(double)>& f, const Range& range, const QuadOptions& opts = {});

// Composite tensor Gauss-Legendre rule over a 2-d box with 10-point panels.
// The `nodes_per_dim` rule is doubled until two successive rules agree to
// `tolerance` (relative to |value|, floored at 1); the finer value is
// returned. Throws OracleFailure after three doublings without agreement.
QuadResult integrate_2d(const std::function<double(double, double)>& f, const Box& box, int nodes_per_dim = 200,
                        double tolerance = 1e-8);

// n-point Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace t3vae::quad
