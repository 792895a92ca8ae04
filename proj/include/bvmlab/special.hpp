#pragma once

// Special functions used throughout the library: error function, normal law,
// log-gamma (Lanczos and Stirling series) and regularized incomplete gamma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "bvmlab/error.hpp"

namespace bvmlab {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

namespace detail {

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n (2x^2)^n x / (1*3*...*(2n+1)); all terms
// positive, so no cancellation for moderate |x|.
inline double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 500; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return 2.0 / kSqrtPi * std::exp(-x2) * sum;
}

// erfc(x) for x > 0 from the continued fraction
//   erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
// evaluated with the modified Lentz algorithm.
inline double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 5000; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / kSqrtPi / f;
}

}  // namespace detail

inline double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  if (ax < 2.0) return detail::erf_series(x);
  if (ax > 6.5) return std::copysign(1.0, x);
  const double v = 1.0 - detail::erfc_continued_fraction(ax);
  return std::copysign(v, x);
}

inline double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 2.0) {
    if (x > -2.0) return 1.0 - detail::erf_series(x);
    if (x < -6.5) return 2.0;
    return 2.0 - detail::erfc_continued_fraction(-x);
  }
  if (x > 27.3) return 0.0;
  return detail::erfc_continued_fraction(x);
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

inline double normal_cdf(double x) { return 0.5 * bvmlab::erfc(-x / kSqrt2); }

/// Upper tail 1 - Phi(x) without cancellation.
inline double normal_sf(double x) { return 0.5 * bvmlab::erfc(x / kSqrt2); }

/// log Gamma(x) for x > 0 by the Lanczos approximation (g = 7, 9 terms).
inline double log_gamma(double x) {
  static constexpr double g = 7.0;
  static constexpr double coeff[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  require(x > 0.0, ErrorCode::out_of_domain, "log_gamma requires x > 0");
  if (x < 0.5) {
    // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double a = coeff[0];
  const double t = z + g + 0.5;
  for (int i = 1; i < 9; ++i) a += coeff[i] / (z + i);
  return kLogSqrt2Pi + (z + 0.5) * std::log(t) - t + std::log(a);
}

/// Stirling series for log Gamma(z) with three correction terms.
inline double log_gamma_stirling(double z) {
  require(z > 0.0, ErrorCode::out_of_domain, "log_gamma_stirling requires z > 0");
  const double z2 = z * z;
  const double z3 = z2 * z;
  const double z5 = z3 * z2;
  return (z - 0.5) * std::log(z) - z + kLogSqrt2Pi + 1.0 / (12.0 * z) - 1.0 / (360.0 * z3) +
         1.0 / (1260.0 * z5);
}

/// log(n!) by direct summation of logs for n <= 10^6, log-gamma beyond.
inline double log_factorial(std::int64_t n) {
  require(n >= 0, ErrorCode::out_of_domain, "log_factorial requires n >= 0");
  if (n > 1'000'000) return log_gamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (std::int64_t k = 2; k <= n; ++k) sum += std::log(static_cast<double>(k));
  return sum;
}

inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 100000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) {
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
  }
  fail(ErrorCode::non_convergence, "incomplete gamma series did not converge");
}

inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) {
      return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
    }
  }
  fail(ErrorCode::non_convergence, "incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  require(a > 0.0 && x >= 0.0, ErrorCode::out_of_domain, "gamma_p requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  require(a > 0.0 && x >= 0.0, ErrorCode::out_of_domain, "gamma_q requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace bvmlab
