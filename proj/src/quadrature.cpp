#include "t3vae/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>

#include "t3vae/errors.hpp"
#include "t3vae/special.hpp"

namespace t3vae::quad {

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod(const std::function<double(double)>& g, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = g(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = g(c - dx);
    const double f2 = g(c + dx);
    kron += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  kron *= h;
  gauss *= h;
  return {a, b, kron, std::fabs(kron - gauss)};
}

// Maps the range onto a finite interval; returns the transformed integrand.
std::function<double(double)> finite_form(const std::function<double(double)>& f, const Range& r, double& a,
                                          double& b) {
  const bool lo_inf = std::isinf(r.lower);
  const bool hi_inf = std::isinf(r.upper);
  if (!lo_inf && !hi_inf) {
    a = r.lower;
    b = r.upper;
    return f;
  }
  const double s = r.scale;
  if (lo_inf && hi_inf) {
    a = -1.0;
    b = 1.0;
    const double c = r.center;
    return [&f, c, s](double t) {
      const double d = 1.0 - t * t;
      return f(c + s * t / d) * s * (1.0 + t * t) / (d * d);
    };
  }
  a = 0.0;
  b = 1.0;
  if (hi_inf) {
    const double lo = r.lower;
    return [&f, lo, s](double t) {
      const double d = 1.0 - t;
      return f(lo + s * t / d) * s / (d * d);
    };
  }
  const double hi = r.upper;
  return [&f, hi, s](double t) {
    const double d = 1.0 - t;
    return f(hi - s * t / d) * s / (d * d);
  };
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, const Range& range, const QuadOptions& opts) {
  if (!(range.upper > range.lower)) throw ContractError("integrate: empty range");
  long evals = 0;
  std::function<double(double)> counted = [&](double x) {
    ++evals;
    const double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "integrate: non-finite integrand value at x = " << x;
      throw OracleFailure(os.str());
    }
    return v;
  };
  double a = 0.0;
  double b = 0.0;
  const auto g = finite_form(counted, range, a, b);

  std::priority_queue<Segment> heap;
  double total = 0.0;
  double error = 0.0;
  const int init = std::max(1, opts.initial_intervals);
  for (int i = 0; i < init; ++i) {
    const double lo = a + (b - a) * i / init;
    const double hi = a + (b - a) * (i + 1) / init;
    Segment s = kronrod(g, lo, hi);
    total += s.value;
    error += s.error;
    heap.push(s);
  }
  int intervals = init;
  while (error > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
    if (intervals >= opts.max_intervals) {
      std::ostringstream os;
      os << "integrate: no convergence after " << intervals << " intervals (estimate " << total << ", error "
         << error << ")";
      throw OracleFailure(os.str());
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = kronrod(g, worst.a, mid);
    const Segment right = kronrod(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
    // Resum occasionally to stop drift from incremental updates.
    if (intervals % 256 == 0) {
      auto copy = heap;
      total = 0.0;
      error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, error, evals};
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ContractError("gauss_legendre: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(special::kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
};

AxisRule axis_rule(const Range& r, int nodes_per_dim) {
  constexpr int kPanelPoints = 10;
  const int panels = std::max(1, nodes_per_dim / kPanelPoints);
  std::vector<double> gx;
  std::vector<double> gw;
  gauss_legendre(kPanelPoints, gx, gw);

  const bool lo_inf = std::isinf(r.lower);
  const bool hi_inf = std::isinf(r.upper);
  double a = r.lower;
  double b = r.upper;
  if (lo_inf && hi_inf) {
    a = -1.0;
    b = 1.0;
  } else if (lo_inf || hi_inf) {
    a = 0.0;
    b = 1.0;
  }
  AxisRule rule;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * p / panels;
    const double hi = a + (b - a) * (p + 1) / panels;
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    for (int k = 0; k < kPanelPoints; ++k) {
      const double t = c + h * gx[k];
      double x = t;
      double jac = 1.0;
      if (lo_inf && hi_inf) {
        const double d = 1.0 - t * t;
        x = r.center + r.scale * t / d;
        jac = r.scale * (1.0 + t * t) / (d * d);
      } else if (hi_inf) {
        const double d = 1.0 - t;
        x = r.lower + r.scale * t / d;
        jac = r.scale / (d * d);
      } else if (lo_inf) {
        const double d = 1.0 - t;
        x = r.upper - r.scale * t / d;
        jac = r.scale / (d * d);
      }
      rule.x.push_back(x);
      rule.w.push_back(h * gw[k] * jac);
    }
  }
  return rule;
}

double tensor_sum(const std::function<double(double, double)>& f, const AxisRule& rx, const AxisRule& ry,
                  long& evals) {
  double total = 0.0;
  for (std::size_t i = 0; i < rx.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ry.x.size(); ++j) {
      const double v = f(rx.x[i], ry.x[j]);
      ++evals;
      if (!std::isfinite(v)) throw OracleFailure("integrate_2d: non-finite integrand value");
      row += ry.w[j] * v;
    }
    total += rx.w[i] * row;
  }
  return total;
}

}  // namespace

QuadResult integrate_2d(const std::function<double(double, double)>& f, const Box& box, int nodes_per_dim,
                        double tolerance) {
  if (box.size() != 2) throw ContractError("integrate_2d: box must be 2-dimensional");
  constexpr int kMaxDoublings = 3;
  long evals = 0;
  int n = nodes_per_dim;
  double coarse = tensor_sum(f, axis_rule(box[0], n), axis_rule(box[1], n), evals);
  for (int level = 0; level <= kMaxDoublings; ++level, n *= 2) {
    const double fine = tensor_sum(f, axis_rule(box[0], 2 * n), axis_rule(box[1], 2 * n), evals);
    const double err = std::fabs(fine - coarse);
    if (err <= tolerance * std::max(1.0, std::fabs(fine))) return {fine, err, evals};
    coarse = fine;
  }
  std::ostringstream os;
  os.precision(15);
  os << "integrate_2d: resolution check failed at " << n << " nodes per dimension (last value " << coarse << ")";
  throw OracleFailure(os.str());
}

}  // namespace t3vae::quad
