#pragma once

// Maximum-likelihood centring theta_n and curvature alpha_n^2 = -l''(theta_n),
// plus the multinomial curvature matrix H and per-observation Fisher
// information.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/models.hpp"

namespace bvmlab {

struct MleResult {
  /// Maximizer; for multinomial data the free coordinates q_1..q_{t-1}.
  std::vector<double> point;
  /// -l''(theta_n) for scalar models; n for multinomial data, where the
  /// curvature lives in InfoMatrix and z = sqrt(n)(x - q).
  double alpha_n_sq = 0.0;
  int iterations = 0;
  bool converged = false;

  double theta_n() const { return point.at(0); }
  double alpha_n() const { return std::sqrt(alpha_n_sq); }
  /// sqrt(2)/alpha_n, the scale of the heat-kernel convention.
  double beta_n() const { return kSqrt2 / alpha_n(); }
};

// ---------------------------------------------------------------------------
// Scalar derivatives

inline double score(const Binomial& m, double theta) {
  const double s = static_cast<double>(m.s());
  const double f = static_cast<double>(m.n() - m.s());
  return s / theta - f / (1.0 - theta);
}

inline double curvature(const Binomial& m, double theta) {
  const double s = static_cast<double>(m.s());
  const double f = static_cast<double>(m.n() - m.s());
  return -s / (theta * theta) - f / ((1.0 - theta) * (1.0 - theta));
}

inline double score(const Location& m, double a) {
  double g = 0.0;
  for (double x : m.observations()) g -= m.law().dlog_density(x - a);
  return g;
}

inline double curvature(const Location& m, double a) {
  double h = 0.0;
  for (double x : m.observations()) h += m.law().d2log_density(x - a);
  return h;
}

// ---------------------------------------------------------------------------

inline MleResult mle_closed_form(const Binomial& m) {
  require(m.s() > 0 && m.s() < m.n(), ErrorCode::boundary_mle, "binomial MLE s/n is on the boundary");
  const double theta = m.frequency();
  return {{theta}, static_cast<double>(m.n()) / (theta * (1.0 - theta)), 0, true};
}

inline MleResult mle_closed_form(const Multinomial& m) {
  for (auto c : m.counts()) require(c > 0, ErrorCode::boundary_mle, "multinomial MLE has a zero frequency");
  auto q = m.frequencies();
  q.pop_back();
  return {std::move(q), static_cast<double>(m.n()), 0, true};
}

inline MleResult mle_closed_form(const ObservationModel& model) {
  return std::visit(
      [](const auto& m) -> MleResult {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Location>) {
          fail(ErrorCode::invalid_argument, "no closed-form MLE for the location family; use mle_newton");
        } else {
          return mle_closed_form(m);
        }
      },
      model);
}

namespace detail {

// Golden-section maximization of a concave f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 400 && b - a > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline MleResult location_kink_fallback(const Location& m, int iterations) {
  const auto& xs = m.observations();
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  auto ll = [&](double a) { return log_likelihood(m, a); };
  const double span = std::max(1.0, *hi - *lo);
  double a = (*lo == *hi) ? *lo : golden_max(ll, *lo, *hi, 1e-13 * span);
  // the maximizer of a piecewise-linear concave function sits on a kink
  for (double x : xs) {
    if (std::fabs(x - a) <= 1e-9 * span && ll(x) >= ll(a)) a = x;
  }
  constexpr double h = 1e-4;
  const double a2 = -(ll(a + h) - 2.0 * ll(a) + ll(a - h)) / (h * h);
  require(a2 > 0.0, ErrorCode::degenerate, "log-likelihood has zero curvature at the maximizer");
  return {{a}, a2, iterations, true};
}

}  // namespace detail

/// Damped Newton iteration on l'. Steps are halved (up to 60 times) while an
/// iterate leaves the domain or decreases l.
template <typename M>
MleResult mle_newton(const M& m, double init) {
  static_assert(std::is_same_v<M, Binomial> || std::is_same_v<M, Location>, "mle_newton needs a scalar model");
  const ParamDomain dom = m.domain();
  require(dom.interior(init), ErrorCode::out_of_domain, "Newton start must be interior");
  const double tol = 1e-10 * std::max(1.0, static_cast<double>(m.n()));
  if constexpr (std::is_same_v<M, Binomial>) {
    require(m.s() > 0 && m.s() < m.n(), ErrorCode::boundary_mle, "binomial likelihood has no interior maximum");
  } else {
    require(m.n() >= 1, ErrorCode::invalid_argument, "location estimation needs at least one observation");
    if (!m.law().smooth()) return detail::location_kink_fallback(m, 0);
  }

  double theta = init;
  double ll = log_likelihood(m, theta);
  for (int it = 0; it < 100; ++it) {
    const double g = score(m, theta);
    const double h = curvature(m, theta);
    if (std::fabs(g) <= tol) return {{theta}, -h, it, true};
    if constexpr (std::is_same_v<M, Location>) {
      if (h == 0.0) return detail::location_kink_fallback(m, it);
    }
    // fall back to a gradient step if the curvature has the wrong sign
    double step = h < 0.0 ? -g / h : g;
    bool accepted = false;
    for (int halving = 0; halving <= 60; ++halving) {
      const double cand = theta + step;
      if (dom.interior(cand)) {
        const double lc = log_likelihood(m, cand);
        if (lc >= ll) {
          theta = cand;
          ll = lc;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no ascent possible along the step: either converged to rounding or stuck
      if (std::fabs(score(m, theta)) <= tol) return {{theta}, -curvature(m, theta), it + 1, true};
      fail(ErrorCode::domain_escape, "Newton iterate could not be kept inside the domain with an ascent step");
    }
  }
  const double g = score(m, theta);
  if (std::fabs(g) <= tol) return {{theta}, -curvature(m, theta), 100, true};
  fail(ErrorCode::non_convergence, "Newton iteration did not converge in 100 iterations");
}

inline MleResult mle_newton(const ObservationModel& model, double init) {
  return std::visit(
      [&](const auto& m) -> MleResult {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Multinomial>) {
          fail(ErrorCode::invalid_argument, "mle_newton needs a one-dimensional model");
        } else {
          return mle_newton(m, init);
        }
      },
      model);
}

inline double sample_median(std::vector<double> xs) {
  require(!xs.empty(), ErrorCode::invalid_argument, "median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size() / 2;
  return xs.size() % 2 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

/// MLE by the natural route for each family.
inline MleResult fit_mle(const ObservationModel& model) {
  return std::visit(
      [](const auto& m) -> MleResult {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Location>) {
          require(m.n() >= 1, ErrorCode::invalid_argument, "location estimation needs at least one observation");
          return mle_newton(m, sample_median(m.observations()));
        } else {
          return mle_closed_form(m);
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Information matrices

struct InfoMatrix {
  Eigen::MatrixXd h;
  Eigen::MatrixXd gamma;
};

/// True when every leading principal minor is strictly positive.
inline bool leading_minors_positive(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  for (Eigen::Index k = 1; k <= m.rows(); ++k) {
    if (!(m.topLeftCorner(k, k).determinant() > 0.0)) return false;
  }
  return true;
}

inline void require_positive_definite(const Eigen::MatrixXd& m, const char* what) {
  require(leading_minors_positive(m), ErrorCode::degenerate, std::string(what) + " is not positive definite");
}

/// H with h_ii = (1/a_i + 1/a_t)/2 and h_ij = 1/(2 a_t), over the first t-1 categories.
inline InfoMatrix info_matrix_multinomial(std::span<const double> a) {
  require(a.size() >= 2, ErrorCode::invalid_argument, "frequency vector needs t >= 2 entries");
  double sum = 0.0;
  for (double v : a) {
    require(v > 0.0, ErrorCode::degenerate, "relative frequency must be positive");
    sum += v;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, ErrorCode::invalid_argument, "relative frequencies must sum to 1");
  const Eigen::Index r = static_cast<Eigen::Index>(a.size()) - 1;
  const double at = a.back();
  Eigen::MatrixXd h = Eigen::MatrixXd::Constant(r, r, 1.0 / (2.0 * at));
  for (Eigen::Index i = 0; i < r; ++i) h(i, i) = 0.5 * (1.0 / a[static_cast<std::size_t>(i)] + 1.0 / at);
  require_positive_definite(h, "H");
  InfoMatrix out{h, 2.0 * h};
  return out;
}

inline InfoMatrix fisher_gamma_bernoulli(double theta) {
  require(theta > 0.0 && theta < 1.0, ErrorCode::out_of_domain, "Bernoulli parameter must lie in (0,1)");
  Eigen::MatrixXd g(1, 1);
  g(0, 0) = 1.0 / (theta * (1.0 - theta));
  return {0.5 * g, g};
}

/// Per-observation multinomial information diag(1/p_i) + 1/p_t over i, j <= t-1.
inline InfoMatrix fisher_gamma_multinomial(std::span<const double> p) {
  require(p.size() >= 2, ErrorCode::invalid_argument, "probability vector needs t >= 2 entries");
  double sum = 0.0;
  for (double v : p) {
    require(v > 0.0, ErrorCode::out_of_domain, "probabilities must be positive");
    sum += v;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, ErrorCode::out_of_domain, "probabilities must sum to 1");
  const Eigen::Index r = static_cast<Eigen::Index>(p.size()) - 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(r, r, 1.0 / p.back());
  for (Eigen::Index i = 0; i < r; ++i) g(i, i) += 1.0 / p[static_cast<std::size_t>(i)];
  require_positive_definite(g, "Fisher information");
  return {0.5 * g, g};
}

inline InfoMatrix fisher_gamma_location(const ErrorLaw& law) {
  require(law.smooth(), ErrorCode::unsupported_family,
          "double-exponential location family has no smooth second derivative");
  Eigen::MatrixXd g(1, 1);
  g(0, 0) = 1.0 / (law.scale() * law.scale());
  return {0.5 * g, g};
}

/// Fisher information of the model's family at theta0 (the data are ignored).
/// Multinomial theta0 is the full probability vector p_1..p_t.
inline InfoMatrix fisher_gamma(const ObservationModel& family, std::span<const double> theta0) {
  return std::visit(
      [&](const auto& m) -> InfoMatrix {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Binomial>) {
          require(theta0.size() == 1, ErrorCode::invalid_argument, "Bernoulli parameter is scalar");
          return fisher_gamma_bernoulli(theta0[0]);
        } else if constexpr (std::is_same_v<M, Multinomial>) {
          return fisher_gamma_multinomial(theta0);
        } else {
          return fisher_gamma_location(m.law());
        }
      },
      family);
}

}  // namespace bvmlab
