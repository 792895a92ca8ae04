#pragma once

// Exact one-dimensional posteriors by deterministic quadrature.
//
// The unnormalized log-posterior l(theta) + log pi(theta) is shifted by its
// value near the mode before exponentiating, so large-n likelihoods never
// underflow. Panels are laid out around the posterior bulk and at prior knots
// and likelihood kinks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/estimate.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

class PosteriorDensity {
 public:
  /// Builds the posterior of a scalar model (binomial or location).
  static PosteriorDensity build(ObservationModel model, PriorSpec prior, const QuadOptions& opts = {}) {
    return PosteriorDensity(std::move(model), std::move(prior), opts);
  }

  const ObservationModel& model() const { return model_; }
  const PriorSpec& prior() const { return prior_; }
  const ParamDomain& domain() const { return domain_; }
  /// log of the normalizing constant C = integral of likelihood * prior.
  double log_norm_const() const { return log_norm_; }
  /// Rough location and spread of the posterior bulk used for panel layout.
  double bulk_center() const { return center_; }
  double bulk_scale() const { return scale_; }
  const std::vector<double>& breakpoints() const { return breaks_; }

  double log_density(double theta) const {
    if (!domain_.interior(theta)) return -std::numeric_limits<double>::infinity();
    return log_unnormalized(theta) - log_norm_;
  }

  double density(double theta) const { return std::exp(log_density(theta)); }

  /// Posterior mass of [z1, z2], clamped to [0, 1].
  double interval_probability(double z1, double z2) const {
    require(!std::isnan(z1) && !std::isnan(z2), ErrorCode::out_of_domain, "interval end is NaN");
    require(z1 <= z2, ErrorCode::reversed_interval, "interval requires z1 < z2");
    require(z1 >= domain_.lo() && z2 <= domain_.hi(), ErrorCode::out_of_domain,
            "interval must lie in the closed domain");
    if (z1 == z2) return 0.0;
    return std::clamp(mass(z1, z2), 0.0, 1.0);
  }

  double cdf(double theta) const {
    if (theta <= domain_.lo()) return 0.0;
    if (theta >= domain_.hi()) return 1.0;
    // cumulative mass up to the last breakpoint below theta, then one panel
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), theta);
    const std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
    const double v = cumulative_[i] + mass(breaks_[i], theta);
    return std::clamp(v, 0.0, 1.0);
  }

  /// Upper tail 1 - cdf(theta) computed directly.
  double survival(double theta) const {
    if (theta <= domain_.lo()) return 1.0;
    if (theta >= domain_.hi()) return 0.0;
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), theta);
    const std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    double v = (i < breaks_.size()) ? mass(theta, breaks_[i]) : 0.0;
    for (std::size_t j = i; j + 1 < breaks_.size(); ++j) v += panel_mass_[j];
    return std::clamp(v, 0.0, 1.0);
  }

  /// Inverse CDF by bisection to 1e-10 in theta.
  double quantile(double q) const {
    require(q > 0.0 && q < 1.0, ErrorCode::invalid_argument, "quantile level must lie in (0,1)");
    double lo = 0.0;
    double hi = 0.0;
    if (domain_.kind() == ParamDomain::Kind::open_interval) {
      const double w = domain_.hi() - domain_.lo();
      lo = domain_.lo() + 1e-12 * w;
      hi = domain_.hi() - 1e-12 * w;
    } else {
      lo = center_ - 64.0 * scale_;
      hi = center_ + 64.0 * scale_;
      while (cdf(lo) > q) lo -= 2.0 * (hi - lo);
      while (cdf(hi) < q) hi += 2.0 * (hi - lo);
    }
    for (int it = 0; it < 400 && hi - lo > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < q) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  double median() const { return quantile(0.5); }

  /// |integral of the density - 1| recomputed from scratch.
  double normalization_error() const {
    const double total = integrate_or_throw([this](double t) { return density(t); }, breaks_, opts_);
    return std::fabs(total - 1.0);
  }

  /// Writes `theta,density,cdf` rows for an increasing grid.
  void write_grid_csv(std::ostream& out, std::span<const double> grid) const {
    out << "theta,density,cdf\n";
    char buf[96];
    for (std::size_t i = 0; i < grid.size(); ++i) {
      require(i == 0 || grid[i] >= grid[i - 1], ErrorCode::invalid_argument, "grid must be nondecreasing");
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid[i], density(grid[i]), cdf(grid[i]));
      out << buf;
    }
  }

 private:
  PosteriorDensity(ObservationModel model, PriorSpec prior, const QuadOptions& opts)
      : model_(std::move(model)), prior_(std::move(prior)), domain_(domain_of(model_)), opts_(opts) {
    require(!std::holds_alternative<Multinomial>(model_), ErrorCode::invalid_argument,
            "multinomial posteriors are built by the multinomial module");
    require(prior_.domain().is_scalar() && prior_.domain().lo() == domain_.lo() && prior_.domain().hi() == domain_.hi(),
            ErrorCode::invalid_argument, "prior domain does not match the model domain");
    layout();
    shift_ = peak_estimate();
    require(std::isfinite(shift_), ErrorCode::zero_mass, "posterior kernel vanishes on every probe point");

    const std::size_t panels = breaks_.size() - 1;
    panel_mass_.assign(panels, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
      const std::array<double, 2> ends{breaks_[i], breaks_[i + 1]};
      panel_mass_[i] = integrate_or_throw([this](double t) { return shifted_kernel(t); }, ends, opts_);
      total += panel_mass_[i];
    }
    require(std::isfinite(total), ErrorCode::non_finite, "normalizing integral is not finite");
    require(total > 0.0, ErrorCode::zero_mass, "normalizing integral underflows to zero");
    log_norm_ = shift_ + std::log(total);
    cumulative_.assign(breaks_.size(), 0.0);
    for (std::size_t i = 0; i < panels; ++i) {
      panel_mass_[i] /= total;
      cumulative_[i + 1] = cumulative_[i] + panel_mass_[i];
    }
  }

  double log_unnormalized(double theta) const {
    const double lp = prior_.log_density(theta);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    return std::visit(
               [theta](const auto& m) -> double {
                 using M = std::decay_t<decltype(m)>;
                 if constexpr (std::is_same_v<M, Multinomial>) {
                   return std::numeric_limits<double>::quiet_NaN();
                 } else {
                   return log_likelihood(m, theta);
                 }
               },
               model_) +
           lp;
  }

  double shifted_kernel(double theta) const {
    if (!domain_.interior(theta)) return 0.0;
    return std::exp(log_unnormalized(theta) - shift_);
  }

  double mass(double a, double b) const {
    std::vector<double> pts{a};
    for (double x : breaks_) {
      if (x > a && x < b) pts.push_back(x);
    }
    pts.push_back(b);
    return integrate_or_throw([this](double t) { return density(t); }, pts, opts_);
  }

  // Bulk location/scale from the data, then panels at centre +- 2^k scale.
  void layout() {
    std::vector<double> extra;
    if (const auto* b = std::get_if<Binomial>(&model_)) {
      const double n = static_cast<double>(b->n());
      center_ = (static_cast<double>(b->s()) + 1.0) / (n + 2.0);
      scale_ = std::sqrt(center_ * (1.0 - center_) / (n + 3.0));
    } else {
      const auto& loc = std::get<Location>(model_);
      if (loc.n() > 0) {
        center_ = sample_median(loc.observations());
        scale_ = loc.law().scale() / std::sqrt(static_cast<double>(loc.n()));
        if (!loc.law().smooth()) extra = loc.observations();
      } else if (const auto* tg = std::get_if<prior_kind::TruncatedGaussian>(&prior_.kind())) {
        center_ = tg->mu;
        scale_ = tg->sigma;
      } else if (const auto* pw = std::get_if<prior_kind::PiecewiseLinear>(&prior_.kind())) {
        center_ = 0.5 * (pw->knots.front().first + pw->knots.back().first);
        scale_ = 0.25 * (pw->knots.back().first - pw->knots.front().first);
      } else {
        center_ = 0.0;
        scale_ = 1.0;
      }
    }
    if (const auto* pw = std::get_if<prior_kind::PiecewiseLinear>(&prior_.kind())) {
      for (const auto& k : pw->knots) extra.push_back(k.first);
    }

    breaks_ = {domain_.lo(), domain_.hi()};
    auto add = [&](double x) {
      if (std::isfinite(x) && x > domain_.lo() && x < domain_.hi()) breaks_.push_back(x);
    };
    add(center_);
    for (double k = 0.5; k <= 64.0; k *= 2.0) {
      add(center_ - k * scale_);
      add(center_ + k * scale_);
    }
    for (double x : extra) add(x);
    if (domain_.kind() == ParamDomain::Kind::open_interval) {
      for (int i = 1; i < 8; ++i) add(domain_.lo() + (domain_.hi() - domain_.lo()) * i / 8.0);
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  }

  double peak_estimate() const {
    double best = -std::numeric_limits<double>::infinity();
    auto probe = [&](double t) {
      if (domain_.interior(t)) best = std::max(best, log_unnormalized(t));
    };
    for (int k = -64; k <= 64; ++k) probe(center_ + 0.125 * k * scale_);
    for (double b : breaks_) probe(b);
    if (domain_.kind() == ParamDomain::Kind::open_interval) {
      for (int i = 1; i < 1000; ++i) probe(domain_.lo() + (domain_.hi() - domain_.lo()) * i / 1000.0);
    }
    if (const auto* pw = std::get_if<prior_kind::PiecewiseLinear>(&prior_.kind())) {
      for (std::size_t i = 0; i + 1 < pw->knots.size(); ++i) {
        for (int j = 1; j < 64; ++j) {
          probe(pw->knots[i].first + (pw->knots[i + 1].first - pw->knots[i].first) * j / 64.0);
        }
      }
    }
    return best;
  }

  ObservationModel model_;
  PriorSpec prior_;
  ParamDomain domain_;
  QuadOptions opts_;
  double center_ = 0.0;
  double scale_ = 1.0;
  double shift_ = 0.0;
  double log_norm_ = 0.0;
  std::vector<double> breaks_;
  std::vector<double> panel_mass_;
  std::vector<double> cumulative_;
};

inline PosteriorDensity posterior_build(ObservationModel model, PriorSpec prior, const QuadOptions& opts = {}) {
  return PosteriorDensity::build(std::move(model), std::move(prior), opts);
}

// ---------------------------------------------------------------------------

/// std-normal: limit exp(-x^2/2)/sqrt(2 pi), x = alpha_n (theta - theta_n).
/// heat-kernel: limit exp(-u^2)/sqrt(pi), u = (theta - theta_n)/beta_n, beta_n = sqrt(2)/alpha_n.
enum class Convention { std_normal, heat_kernel };

inline const char* to_string(Convention c) { return c == Convention::std_normal ? "std-normal" : "heat-kernel"; }

/// The posterior seen in the rescaled coordinate; zero off the mapped domain.
class RescaledPosterior {
 public:
  RescaledPosterior(PosteriorDensity base, double center, double alpha_n, Convention conv = Convention::std_normal)
      : base_(std::move(base)), center_(center), alpha_(alpha_n), conv_(conv) {
    require(alpha_n > 0.0 && std::isfinite(alpha_n), ErrorCode::invalid_argument, "scale alpha_n must be positive");
  }

  const PosteriorDensity& base() const { return base_; }
  double center() const { return center_; }
  double alpha_n() const { return alpha_; }
  Convention convention() const { return conv_; }

  /// Parameter value per unit of the rescaled coordinate.
  double unit() const { return conv_ == Convention::std_normal ? 1.0 / alpha_ : kSqrt2 / alpha_; }

  RescaledPosterior with_convention(Convention c) const { return {base_, center_, alpha_, c}; }

  double to_theta(double x) const { return center_ + x * unit(); }
  double from_theta(double theta) const { return (theta - center_) / unit(); }

  double density(double x) const { return unit() * base_.density(to_theta(x)); }
  double cdf(double x) const { return base_.cdf(to_theta(x)); }
  double survival(double x) const { return base_.survival(to_theta(x)); }

  /// Density of the Gaussian limit in this convention.
  double limit_density(double x) const {
    return conv_ == Convention::std_normal ? normal_pdf(x) : std::exp(-x * x) / kSqrtPi;
  }
  double limit_cdf(double x) const {
    return conv_ == Convention::std_normal ? normal_cdf(x) : 0.5 * bvmlab::erfc(-x);
  }

  /// Rescaled image of the domain endpoints.
  double support_lo() const { return from_theta(base_.domain().lo()); }
  double support_hi() const { return from_theta(base_.domain().hi()); }

  /// Posterior mass outside |x| <= half_width.
  double tail_mass(double half_width) const { return cdf(-half_width) + survival(half_width); }

  /// Breakpoints of the base posterior in rescaled coordinates, within [lo, hi].
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    for (double b : base_.breakpoints()) {
      const double x = from_theta(b);
      if (std::isfinite(x) && x > lo && x < hi) out.push_back(x);
    }
    return out;
  }

 private:
  PosteriorDensity base_;
  double center_;
  double alpha_;
  Convention conv_;
};

inline RescaledPosterior rescaled_density(const PosteriorDensity& post, const MleResult& mle,
                                          Convention conv = Convention::std_normal) {
  require(mle.point.size() == 1, ErrorCode::invalid_argument, "rescaling needs a scalar MLE");
  return {post, mle.theta_n(), mle.alpha_n(), conv};
}

/// R_n(x) = l(theta_n + x/alpha_n) - l(theta_n) + x^2/2.
inline double expansion_remainder(const ObservationModel& model, const MleResult& mle, double x) {
  require(mle.point.size() == 1, ErrorCode::invalid_argument, "expansion remainder needs a scalar MLE");
  const double theta = mle.theta_n() + x / mle.alpha_n();
  require(domain_of(model).interior(theta), ErrorCode::domain_escape, "theta_n + x/alpha_n leaves the domain");
  const std::array<double, 1> p1{theta};
  const std::array<double, 1> p0{mle.theta_n()};
  return log_likelihood(model, p1) - log_likelihood(model, p0) + 0.5 * x * x;
}

}  // namespace bvmlab
