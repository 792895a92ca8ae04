#pragma once

// Globally adaptive Gauss-Kronrod (G7/K15) quadrature.
//
// The integration range is given as a sorted list of breakpoints; the outer two
// may be infinite, in which case the tail panel is mapped onto [0, 1) with
// x = a + t / (1 - t). Panels are bisected in order of decreasing error
// estimate until the total estimate drops below max(abs_tol, rel_tol * |I|)
// or the subinterval budget is exhausted.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bvmlab/error.hpp"

namespace bvmlab {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_subintervals = std::size_t{1} << 16;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t subintervals = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <typename F>
Panel gauss_kronrod(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(centre - dx);
    const double f2 = f(centre + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) fail(ErrorCode::non_finite, "integrand is not finite on the panel");
  return {a, b, kronrod, std::fabs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over the union of consecutive panels [p_i, p_{i+1}].
template <typename F>
QuadResult integrate(F&& f, std::span<const double> breakpoints, const QuadOptions& opts = {}) {
  require(breakpoints.size() >= 2, ErrorCode::invalid_argument, "integrate needs at least two breakpoints");
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> points(breakpoints.begin(), breakpoints.end());
  for (std::size_t i = 1; i < points.size(); ++i) {
    require(!(points[i] < points[i - 1]), ErrorCode::invalid_argument, "breakpoints must be sorted");
  }
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    require(std::isfinite(points[i]), ErrorCode::invalid_argument, "interior breakpoints must be finite");
  }
  if (points.size() == 2 && points.front() == -inf && points.back() == inf) points.insert(points.begin() + 1, 0.0);

  // Tail panels integrate the pulled-back integrand over t in [0, 1).
  auto pulled = [&](double x_lo, double x_hi) {
    return [&f, x_lo, x_hi](double t) {
      const double u = t / (1.0 - t);
      const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
      const double x = (x_lo == -inf) ? x_hi - u : x_lo + u;
      const double v = f(x);
      return v == 0.0 ? 0.0 : v * jac;
    };
  };
  auto plain = [&f](double x) { return f(x); };

  // kind 0: finite panel; 1: left tail ending at points[1]; 2: right tail
  struct Work {
    detail::Panel panel;
    int kind;
    double anchor;
  };
  auto eval = [&](int kind, double anchor, double a, double b) {
    if (kind == 0) return detail::gauss_kronrod(plain, a, b);
    if (kind == 1) {
      auto g = pulled(-inf, anchor);
      return detail::gauss_kronrod(g, a, b);
    }
    auto g = pulled(anchor, inf);
    return detail::gauss_kronrod(g, a, b);
  };
  auto cmp = [](const Work& x, const Work& y) { return x.panel < y.panel; };
  std::priority_queue<Work, std::vector<Work>, decltype(cmp)> queue(cmp);

  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i];
    const double b = points[i + 1];
    if (a == b) continue;
    if (a == -inf) {
      queue.push({eval(1, b, 0.0, 1.0), 1, b});
    } else if (b == inf) {
      queue.push({eval(2, a, 0.0, 1.0), 2, a});
    } else {
      queue.push({eval(0, 0.0, a, b), 0, 0.0});
    }
  }

  QuadResult result;
  auto totals = [&]() {
    double value = 0.0;
    double error = 0.0;
    auto copy = queue;
    while (!copy.empty()) {
      value += copy.top().panel.value;
      error += copy.top().panel.error;
      copy.pop();
    }
    return std::pair{value, error};
  };

  double value = 0.0;
  double error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  while (!queue.empty()) {
    if (error <= std::max(opts.abs_tol, opts.rel_tol * std::fabs(value))) {
      result.converged = true;
      break;
    }
    if (queue.size() >= opts.max_subintervals) break;
    const Work worst = queue.top();
    const double mid = 0.5 * (worst.panel.a + worst.panel.b);
    if (!(mid > worst.panel.a && mid < worst.panel.b)) break;  // no resolution left
    queue.pop();
    const Work left{eval(worst.kind, worst.anchor, worst.panel.a, mid), worst.kind, worst.anchor};
    const Work right{eval(worst.kind, worst.anchor, mid, worst.panel.b), worst.kind, worst.anchor};
    value += left.panel.value + right.panel.value - worst.panel.value;
    error += left.panel.error + right.panel.error - worst.panel.error;
    queue.push(left);
    queue.push(right);
  }
  if (queue.empty()) result.converged = true;

  // Re-sum from scratch so the running-update drift does not leak into results.
  auto [v, e] = totals();
  result.value = v;
  result.abs_error = e;
  result.subintervals = queue.size();
  if (!result.converged) result.converged = e <= std::max(opts.abs_tol, opts.rel_tol * std::fabs(v));
  return result;
}

template <typename F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opts = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts), opts);
}

/// Like integrate() but throws a non-finite error when the tolerance is not met.
template <typename F>
double integrate_or_throw(F&& f, std::span<const double> breakpoints, const QuadOptions& opts = {}) {
  const QuadResult r = integrate(std::forward<F>(f), breakpoints, opts);
  if (!r.converged || !std::isfinite(r.value)) {
    fail(ErrorCode::non_finite, "quadrature did not reach tolerance (estimate " + std::to_string(r.abs_error) + ")");
  }
  return r.value;
}

template <typename F>
double integrate_or_throw(F&& f, double a, double b, const QuadOptions& opts = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate_or_throw(std::forward<F>(f), std::span<const double>(pts), opts);
}

}  // namespace bvmlab
