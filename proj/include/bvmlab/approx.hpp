#pragma once

// Gaussian limits and the classical approximation toolkit: the binomial tail
// formula, concentration gap, Stirling normalizer, Bernstein's window and
// tail bound, and product integrals of peaked factors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/estimate.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

// ---------------------------------------------------------------------------
// Gaussian limit

/// Normal law N(center, precision^{-1}). The heat-kernel convention writes the
/// same law as exp(-z^T H z) with H = precision / 2; the density is identical,
/// only the reported exponent matrix differs.
class GaussianApprox {
 public:
  GaussianApprox(Eigen::VectorXd center, Eigen::MatrixXd precision, Convention conv = Convention::std_normal)
      : center_(std::move(center)), precision_(std::move(precision)), conv_(conv) {
    require(precision_.rows() == precision_.cols() && precision_.rows() == center_.size(), ErrorCode::invalid_argument,
            "precision must be square and match the centre");
    require(leading_minors_positive(precision_), ErrorCode::degenerate, "precision is not positive definite");
    llt_.compute(precision_);
    log_norm_ = 0.0;
    for (Eigen::Index i = 0; i < precision_.rows(); ++i) log_norm_ += std::log(llt_.matrixL()(i, i));
    log_norm_ -= static_cast<double>(dim()) * kLogSqrt2Pi;
  }

  static GaussianApprox scalar(double center, double scale, Convention conv = Convention::std_normal) {
    require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_argument, "scale must be positive");
    Eigen::VectorXd c(1);
    c(0) = center;
    Eigen::MatrixXd p(1, 1);
    p(0, 0) = 1.0 / (scale * scale);
    return {c, p, conv};
  }

  /// Limit of a multinomial posterior in z = sqrt(n)(x - a): centre 0, precision 2H.
  static GaussianApprox from_h(const Eigen::MatrixXd& h) {
    return {Eigen::VectorXd::Zero(h.rows()), 2.0 * h, Convention::heat_kernel};
  }

  Eigen::Index dim() const { return center_.size(); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  Eigen::MatrixXd covariance() const { return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim())); }
  double scale() const { return 1.0 / std::sqrt(precision_(0, 0)); }
  Convention convention() const { return conv_; }
  /// Matrix in the exponent as the convention writes it.
  Eigen::MatrixXd exponent_matrix() const { return conv_ == Convention::std_normal ? precision_ : 0.5 * precision_; }

  double log_density(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd d = z - center_;
    return log_norm_ - 0.5 * d.dot(precision_ * d);
  }
  double density(const Eigen::VectorXd& z) const { return std::exp(log_density(z)); }

  /// Maps a standard normal vector to a draw from this law.
  Eigen::VectorXd transform(const Eigen::VectorXd& std_normal) const {
    // precision = L L^T, so x = c + L^{-T} e has covariance precision^{-1}
    return center_ + llt_.matrixU().solve(std_normal);
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd precision_;
  Convention conv_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Binomial tail formula

struct LaplaceTail {
  double value = 0.0;
  double omega_alpha = 0.0;
  /// n * omega^3; the formula is only justified while this is small.
  double n_omega_cubed = 0.0;
};

/// P(theta_n - omega <= theta <= theta_n + omega) ~ erf(omega alpha_n / sqrt 2).
inline LaplaceTail laplace_tail(const Binomial& m, double omega) {
  require(omega > 0.0, ErrorCode::invalid_argument, "half-width must be positive");
  const auto fit = mle_closed_form(m);
  LaplaceTail out;
  out.omega_alpha = omega * fit.alpha_n();
  out.value = std::isinf(omega) ? 1.0 : bvmlab::erf(out.omega_alpha / kSqrt2);
  out.n_omega_cubed = static_cast<double>(m.n()) * omega * omega * omega;
  return out;
}

/// Exact posterior mass outside [theta_n - eps, theta_n + eps].
inline double second_law_gap(const Binomial& m, const PriorSpec& prior, double eps) {
  require(eps > 0.0, ErrorCode::invalid_argument, "half-width must be positive");
  const double theta = mle_closed_form(m).theta_n();
  const auto post = posterior_build(m, prior);
  const double lo = theta - eps;
  const double hi = theta + eps;
  return std::max(0.0, (lo > 0.0 ? post.cdf(lo) : 0.0) + (hi < 1.0 ? post.survival(hi) : 0.0));
}

// ---------------------------------------------------------------------------
// Stirling normalizer of the uniform-prior binomial posterior

struct StirlingComparison {
  double exact = 0.0;     // log[(n+1)! / (s! (n-s)!)]
  double stirling = 0.0;  // same via the Stirling series
  double relative_gap = 0.0;
};

inline StirlingComparison stirling_normalizer(std::int64_t n, std::int64_t s) {
  require(n >= 0 && s >= 0 && s <= n, ErrorCode::invalid_argument, "requires 0 <= s <= n");
  StirlingComparison out;
  out.exact = log_factorial(n + 1) - log_factorial(s) - log_factorial(n - s);
  const auto lg = [](std::int64_t k) { return log_gamma_stirling(static_cast<double>(k) + 1.0); };
  out.stirling = lg(n + 1) - lg(s) - lg(n - s);
  const double diff = std::fabs(out.exact - out.stirling);
  out.relative_gap = out.exact != 0.0 ? diff / std::fabs(out.exact) : diff;
  return out;
}

// ---------------------------------------------------------------------------
// Bernstein's window

struct BernsteinWindow {
  std::int64_t n = 0;
  double theta_n = 0.0;
  double alpha_n = 0.0;
  double L = 0.0;
  double epsilon = 0.0;
  double M = 0.0;
  double alpha1_bound = 0.0;
  double alpha_prime = 0.0;
};

inline BernsteinWindow bernstein_window(const Binomial& m, const PriorSpec& prior) {
  const auto fit = mle_closed_form(m);
  const auto sup = prior.sup_density();
  require(sup.has_value(), ErrorCode::invalid_argument, "Bernstein's bound needs a bounded prior");
  BernsteinWindow w;
  w.n = m.n();
  w.theta_n = fit.theta_n();
  w.alpha_n = fit.alpha_n();
  w.L = std::pow(static_cast<double>(m.n()), 1.0 / 12.0);
  w.epsilon = w.L * fit.beta_n();
  w.M = *sup;
  require(w.epsilon < std::min(w.theta_n, 1.0 - w.theta_n), ErrorCode::out_of_domain,
          "Bernstein window reaches the domain boundary");

  const double n = static_cast<double>(m.n());
  const double s = static_cast<double>(m.s());
  const double f = n - s;
  const double q = -2.0 * s * f / (n * n * n);
  const double f0 = prior.density(w.theta_n);
  require(f0 > 0.0, ErrorCode::invalid_argument, "prior vanishes at theta_n");
  constexpr int kGrid = 1001;
  for (int i = 0; i < kGrid; ++i) {
    const double y = -w.epsilon + 2.0 * w.epsilon * i / (kGrid - 1);
    w.alpha_prime = std::max(w.alpha_prime, std::fabs(prior.density(w.theta_n + y) / f0 - 1.0));
    if (i == kGrid / 2) continue;  // y = 0
    const double log_ratio = s * std::log1p(y / w.theta_n) + f * std::log1p(-y / (1.0 - w.theta_n));
    w.alpha1_bound = std::max(w.alpha1_bound, std::fabs(log_ratio * q / (y * y) - 1.0));
  }
  return w;
}

struct BernsteinTail {
  double bound = 0.0;     // M exp(-L^2 (1 - alpha1))
  double measured = 0.0;  // integral of prior * likelihood ratio outside the window
};

inline double bernstein_tail_bound(const BernsteinWindow& w) {
  return w.M * std::exp(-w.L * w.L * (1.0 - w.alpha1_bound));
}

/// The bound together with the measured outside-window mass
/// R = int_{|y| >= eps} f(theta_n + y) exp(l(theta_n + y) - l(theta_n)) dy.
inline BernsteinTail bernstein_tail(const Binomial& m, const PriorSpec& prior) {
  const auto w = bernstein_window(m, prior);
  const double s = static_cast<double>(m.s());
  const double f = static_cast<double>(m.n() - m.s());
  auto integrand = [&](double y) {
    const double t = w.theta_n + y;
    if (!(t > 0.0 && t < 1.0)) return 0.0;
    return prior.density(t) * std::exp(s * std::log1p(y / w.theta_n) + f * std::log1p(-y / (1.0 - w.theta_n)));
  };
  QuadOptions opts;
  opts.abs_tol = 1e-300;
  const double sc = 1.0 / w.alpha_n;
  auto side = [&](double a, double b, double sign) {
    std::vector<double> pts{a};
    for (double k = 2.0; k < 256.0; k *= 2.0) {
      const double y = sign * (w.epsilon + k * sc);
      if (y > a && y < b) pts.push_back(y);
    }
    std::sort(pts.begin(), pts.end());
    pts.push_back(b);
    return integrate_or_throw(integrand, pts, opts);
  };
  BernsteinTail out;
  out.bound = bernstein_tail_bound(w);
  out.measured = side(-w.theta_n, -w.epsilon, -1.0) + side(w.epsilon, 1.0 - w.theta_n, 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Product integrals of peaked factors

/// A family of factors f_i with f_i(a_i) = 1, f_i'(a_i) = 0, f_i''(a_i) = -2 s_i^2,
/// evaluated jointly at a common offset from the centres.
template <typename S>
concept FactorSequence = requires(const S& s, std::size_t i, double x) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.centre(i) } -> std::convertible_to<double>;
  { s.log_factor(i, x) } -> std::convertible_to<double>;
  { s.log_product(x) } -> std::convertible_to<double>;  // sum_i log f_i(a_i + x)
  { s.r_n() } -> std::convertible_to<double>;           // sqrt(sum_i s_i^2)
  { s.offset_lo() } -> std::convertible_to<double>;     // admissible offsets
  { s.offset_hi() } -> std::convertible_to<double>;
};

/// n copies of f(x) = (x/a)^a ((1-x)/(1-a))^{1-a} on (0, 1).
class BinomialFactors {
 public:
  BinomialFactors(double a, std::int64_t n) : a_(a), n_(n) {
    require(a > 0.0 && a < 1.0, ErrorCode::invalid_argument, "binomial factor centre must lie in (0,1)");
    require(n >= 1, ErrorCode::invalid_argument, "need at least one factor");
  }
  std::size_t size() const { return static_cast<std::size_t>(n_); }
  double centre(std::size_t) const { return a_; }
  double log_factor(std::size_t, double x) const {
    if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
    return a_ * std::log(x / a_) + (1.0 - a_) * std::log((1.0 - x) / (1.0 - a_));
  }
  double log_product(double d) const {
    const double x = a_ + d;
    if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(n_) * (a_ * std::log1p(d / a_) + (1.0 - a_) * std::log1p(-d / (1.0 - a_)));
  }
  double r_n() const { return std::sqrt(static_cast<double>(n_) / (2.0 * a_ * (1.0 - a_))); }
  double offset_lo() const { return -a_; }
  double offset_hi() const { return 1.0 - a_; }

 private:
  double a_;
  std::int64_t n_;
};

/// n copies of f(x) = exp(-(x - a)^2); the product at offset u/sqrt(n) is exp(-u^2).
class GaussianFactors {
 public:
  GaussianFactors(double a, std::int64_t n) : a_(a), n_(n) {
    require(n >= 1, ErrorCode::invalid_argument, "need at least one factor");
  }
  std::size_t size() const { return static_cast<std::size_t>(n_); }
  double centre(std::size_t) const { return a_; }
  double log_factor(std::size_t, double x) const { return -(x - a_) * (x - a_); }
  double log_product(double d) const { return -static_cast<double>(n_) * d * d; }
  double r_n() const { return std::sqrt(static_cast<double>(n_)); }
  double offset_lo() const { return -std::numeric_limits<double>::infinity(); }
  double offset_hi() const { return std::numeric_limits<double>::infinity(); }

 private:
  double a_;
  std::int64_t n_;
};

/// Checks f_i(a_i) = 1 and f_i'(a_i) = 0 to 1e-8 on (a sample of) the factors.
template <FactorSequence S>
void verify_factors(const S& seq) {
  const std::size_t n = seq.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 1000);
  constexpr double h = 1e-6;
  for (std::size_t i = 0; i < n; i += stride) {
    const double a = seq.centre(i);
    const double f0 = std::exp(seq.log_factor(i, a));
    const double d1 = (std::exp(seq.log_factor(i, a + h)) - std::exp(seq.log_factor(i, a - h))) / (2.0 * h);
    require(std::fabs(f0 - 1.0) <= 1e-8, ErrorCode::spec_violation, "factor is not 1 at its centre");
    require(std::fabs(d1) <= 1e-8, ErrorCode::spec_violation, "factor is not stationary at its centre");
  }
}

struct ProductIntegral {
  double value = 0.0;
  /// psi(a) * int_{x1}^{x2} exp(-u^2) du.
  double limit = 0.0;
};

/// int_{x1}^{x2} psi(a + u/r_n) prod_i f_i(a_i + u/r_n) du, with the integrand
/// zero where the offset leaves the factors' domain.
template <FactorSequence S, typename Psi>
ProductIntegral vonmises_product_integral(const S& seq, Psi&& psi, double a, double x1, double x2) {
  require(x1 <= x2, ErrorCode::reversed_interval, "integration limits reversed");
  verify_factors(seq);
  const double r = seq.r_n();
  const double lo = std::max(x1, seq.offset_lo() * r);
  const double hi = std::min(x2, seq.offset_hi() * r);
  ProductIntegral out;
  out.limit = psi(a) * 0.5 * kSqrtPi * (bvmlab::erf(x2) - bvmlab::erf(x1));
  if (!(lo < hi)) return out;
  std::vector<double> pts{lo};
  for (double k : {-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    if (k > lo && k < hi) pts.push_back(k);
  }
  pts.push_back(hi);
  auto integrand = [&](double u) {
    const double lp = seq.log_product(u / r);
    if (lp == -std::numeric_limits<double>::infinity()) return 0.0;
    return psi(a + u / r) * std::exp(lp);
  };
  QuadOptions opts;
  opts.abs_tol = 1e-14;
  out.value = integrate_or_throw(integrand, pts, opts);
  return out;
}

/// Weight given by a scalar prior density, zero outside its domain.
inline auto prior_weight(const PriorSpec& prior) {
  return [&prior](double x) {
    return (x > prior.domain().lo() && x < prior.domain().hi()) ? prior.density(x) : 0.0;
  };
}

}  // namespace bvmlab
