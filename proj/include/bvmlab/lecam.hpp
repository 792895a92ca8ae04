#pragma once

// Bayes risk of per-trial binomial estimators under bounded gains, and the
// seeded total-variation experiment for Bernoulli posteriors standardized by
// the Fisher information.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvmlab/distance.hpp"
#include "bvmlab/error.hpp"
#include "bvmlab/estimate.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/parallel.hpp"
#include "bvmlab/parse.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/rng.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

inline constexpr std::int64_t kMaxRiskTrials = 2000;

/// W(T, theta): either -scale (T - theta)^2 or exp(-(T - theta)' D (T - theta)).
class GainFunction {
 public:
  enum class Kind { negative_quadratic, exponential };

  static GainFunction negative_quadratic(double scale = 1.0) {
    require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_argument, "quadratic scale must be positive");
    return GainFunction(Kind::negative_quadratic, Eigen::MatrixXd::Constant(1, 1, scale));
  }
  static GainFunction exponential(double d) { return exponential(Eigen::MatrixXd::Constant(1, 1, d)); }
  static GainFunction exponential(Eigen::MatrixXd d) {
    require(d.rows() == d.cols() && d.rows() >= 1 && d.isApprox(d.transpose()) && leading_minors_positive(d),
            ErrorCode::invalid_argument, "gain matrix D must be symmetric positive definite");
    return GainFunction(Kind::exponential, std::move(d));
  }

  Kind kind() const { return kind_; }
  const Eigen::MatrixXd& d() const { return d_; }

  double operator()(double t, double theta) const {
    require(d_.rows() == 1, ErrorCode::invalid_argument, "scalar gain evaluated with a matrix D");
    const double diff = t - theta;
    const double q = d_(0, 0) * diff * diff;
    return kind_ == Kind::negative_quadratic ? -q : std::exp(-q);
  }

  double operator()(const Eigen::VectorXd& t, const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd diff = t - theta;
    const double q = diff.dot(d_ * diff);
    return kind_ == Kind::negative_quadratic ? -q : std::exp(-q);
  }

  std::string describe() const {
    if (kind_ == Kind::negative_quadratic) return "negative-quadratic:" + detail::fmt_num(d_(0, 0));
    if (d_.rows() == 1) return "exponential:" + detail::fmt_num(d_(0, 0));
    return "exponential:matrix";
  }

 private:
  GainFunction(Kind k, Eigen::MatrixXd d) : kind_(k), d_(std::move(d)) {}
  Kind kind_;
  Eigen::MatrixXd d_;
};

inline GainFunction parse_gain(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::optional<double> arg =
      colon == std::string::npos ? std::nullopt : std::optional<double>(parse_double(text.substr(colon + 1)));
  if (head == "quadratic" || head == "negative-quadratic") return GainFunction::negative_quadratic(arg.value_or(1.0));
  if (head == "exponential" || head == "exp") {
    require(arg.has_value(), ErrorCode::parse, "exponential gain needs D, e.g. exponential:100");
    return GainFunction::exponential(*arg);
  }
  fail(ErrorCode::parse, "unknown gain '" + text + "'");
}

struct Estimator {
  enum class Kind { mle, posterior_mean, posterior_median, constant };
  Kind kind = Kind::mle;
  double c = 0.5;

  static Estimator mle() { return {Kind::mle, 0.0}; }
  static Estimator posterior_mean() { return {Kind::posterior_mean, 0.0}; }
  static Estimator posterior_median() { return {Kind::posterior_median, 0.0}; }
  static Estimator constant(double c) { return {Kind::constant, c}; }

  std::string id() const {
    switch (kind) {
      case Kind::mle: return "mle";
      case Kind::posterior_mean: return "posterior-mean";
      case Kind::posterior_median: return "posterior-median";
      case Kind::constant: return "constant:" + detail::fmt_num(c);
    }
    return "?";
  }
};

inline Estimator parse_estimator(const std::string& text) {
  if (text == "mle") return Estimator::mle();
  if (text == "posterior-mean" || text == "mean") return Estimator::posterior_mean();
  if (text == "posterior-median" || text == "median") return Estimator::posterior_median();
  if (text.rfind("constant", 0) == 0) {
    const auto colon = text.find(':');
    return Estimator::constant(colon == std::string::npos ? 0.5 : parse_double(text.substr(colon + 1)));
  }
  fail(ErrorCode::parse, "unknown estimator '" + text + "'");
}

/// The fixed panel standing in for the supremum over all estimators.
inline std::vector<Estimator> builtin_panel() {
  return {Estimator::mle(), Estimator::posterior_mean(), Estimator::posterior_median(), Estimator::constant(0.5)};
}

/// Mixture weight * first + (1 - weight) * second of two scalar priors.
struct PriorMixture {
  double weight;
  const PriorSpec& first;
  const PriorSpec& second;
  double density(double theta) const {
    return weight * first.density(theta) + (1.0 - weight) * second.density(theta);
  }
};

namespace detail {

inline void check_risk_trials(std::int64_t k) {
  require(k >= 0, ErrorCode::invalid_argument, "k must be nonnegative");
  require(k <= kMaxRiskTrials, ErrorCode::k_cap, "exact Bayes risk needs k <= 2000, got " + std::to_string(k));
}

inline double log_binomial_pmf(std::int64_t k, std::int64_t s, double theta) {
  double lp = log_factorial(k) - log_factorial(s) - log_factorial(k - s);
  if (s > 0) lp += static_cast<double>(s) * std::log(theta);
  if (k - s > 0) lp += static_cast<double>(k - s) * std::log1p(-theta);
  return lp;
}

/// Panel edges around the likelihood peak of s successes in k trials.
inline std::vector<double> likelihood_breaks(std::int64_t k, std::int64_t s, std::initializer_list<double> extra) {
  std::vector<double> b{0.0, 1.0};
  const double m = (static_cast<double>(s) + 1.0) / (static_cast<double>(k) + 2.0);
  const double sd = std::sqrt(m * (1.0 - m) / (static_cast<double>(k) + 3.0));
  for (double j : {0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    for (double sign : {-1.0, 1.0}) {
      const double x = m + sign * j * sd;
      if (x > 0.0 && x < 1.0) b.push_back(x);
    }
  }
  for (double x : extra) {
    if (x > 0.0 && x < 1.0) b.push_back(x);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

inline double posterior_mean(const PosteriorDensity& post) {
  if (const auto* b = std::get_if<prior_kind::Beta>(&post.prior().kind())) {
    const auto& m = std::get<Binomial>(post.model());
    return (static_cast<double>(m.s()) + b->a) / (static_cast<double>(m.n()) + b->a + b->b);
  }
  if (std::holds_alternative<prior_kind::Uniform>(post.prior().kind()) && post.domain().lo() == 0.0 &&
      post.domain().hi() == 1.0) {
    const auto& m = std::get<Binomial>(post.model());
    return (static_cast<double>(m.s()) + 1.0) / (static_cast<double>(m.n()) + 2.0);
  }
  const auto bp = post.breakpoints();
  return integrate_or_throw([&](double t) { return t * post.density(t); }, bp);
}

}  // namespace detail

/// T(s) for s = 0..k. Bayes estimators are formed under `prior`.
inline std::vector<double> estimator_values(std::int64_t k, const Estimator& est, const PriorSpec& prior) {
  detail::check_risk_trials(k);
  require(prior.domain().is_scalar(), ErrorCode::invalid_argument, "binomial risk needs a scalar prior");
  std::vector<double> t(static_cast<std::size_t>(k) + 1);
  switch (est.kind) {
    case Estimator::Kind::mle:
      require(k >= 1, ErrorCode::invalid_argument, "the MLE needs at least one trial");
      for (std::int64_t s = 0; s <= k; ++s) t[static_cast<std::size_t>(s)] = static_cast<double>(s) / static_cast<double>(k);
      break;
    case Estimator::Kind::constant:
      std::fill(t.begin(), t.end(), est.c);
      break;
    case Estimator::Kind::posterior_mean:
    case Estimator::Kind::posterior_median:
      parallel_for(t.size(), [&](std::size_t s) {
        const auto post = posterior_build(Binomial(k, static_cast<std::int64_t>(s)), prior);
        t[s] = est.kind == Estimator::Kind::posterior_mean ? detail::posterior_mean(post) : post.median();
      });
      break;
  }
  return t;
}

/// J = sum_s int W(T(s), theta) binom(k, s) theta^s (1-theta)^(k-s) lambda(theta) dtheta
/// for a fixed estimator table T(0..k) and any prior with density(theta).
template <typename Prior>
double bayes_risk(std::int64_t k, std::span<const double> t, const GainFunction& gain, const Prior& prior) {
  detail::check_risk_trials(k);
  require(t.size() == static_cast<std::size_t>(k) + 1, ErrorCode::invalid_argument, "estimator table needs k + 1 values");
  std::vector<double> terms(t.size(), 0.0);
  parallel_for(t.size(), [&](std::size_t si) {
    const auto s = static_cast<std::int64_t>(si);
    const double ts = t[si];
    const auto breaks = detail::likelihood_breaks(k, s, {ts});
    terms[si] = integrate_or_throw(
                    [&](double theta) {
                      const double w = prior.density(theta);
                      if (w == 0.0) return 0.0;
                      return gain(ts, theta) * std::exp(detail::log_binomial_pmf(k, s, theta)) * w;
                    },
                    breaks);
  });
  double total = 0.0;
  for (double v : terms) total += v;
  return total;
}

inline double bayes_risk(std::int64_t k, const Estimator& est, const GainFunction& gain, const PriorSpec& prior) {
  const auto t = estimator_values(k, est, prior);
  return bayes_risk(k, t, gain, prior);
}

struct RiskEntry {
  std::string estimator;
  double j = 0.0;
};

struct RiskReport {
  std::int64_t k = 0;
  std::string prior;
  std::string gain;
  std::vector<RiskEntry> entries;
  /// Index of the largest J.
  std::size_t best = 0;
};

inline RiskReport risk_report(std::int64_t k, std::span<const Estimator> estimators, const GainFunction& gain,
                              const PriorSpec& prior) {
  require(!estimators.empty(), ErrorCode::invalid_argument, "need at least one estimator");
  RiskReport r;
  r.k = k;
  r.prior = prior.describe();
  r.gain = gain.describe();
  for (const auto& e : estimators) r.entries.push_back({e.id(), bayes_risk(k, e, gain, prior)});
  for (std::size_t i = 1; i < r.entries.size(); ++i) {
    if (r.entries[i].j > r.entries[r.best].j) r.best = i;
  }
  return r;
}

struct EpsilonGap {
  double gap = 0.0;
  double candidate_j = 0.0;
  double best_j = 0.0;
  std::string best;
};

/// J(best of the built-in panel and the candidate) - J(candidate); a lower
/// bound on the gap to the supremum over all estimators.
inline EpsilonGap epsilon_gap(std::int64_t k, const Estimator& candidate, const GainFunction& gain,
                              const PriorSpec& prior) {
  EpsilonGap out;
  out.candidate_j = bayes_risk(k, candidate, gain, prior);
  out.best_j = out.candidate_j;
  out.best = candidate.id();
  for (const auto& e : builtin_panel()) {
    if (e.kind == Estimator::Kind::mle && k == 0) continue;
    const double j = e.id() == candidate.id() ? out.candidate_j : bayes_risk(k, e, gain, prior);
    if (j > out.best_j) {
      out.best_j = j;
      out.best = e.id();
    }
  }
  out.gap = out.best_j - out.candidate_j;
  return out;
}

// ---------------------------------------------------------------------------
// Total-variation experiment

struct TvSummary {
  double median = 0.0;
  double p90 = 0.0;
  double frac_below = 0.0;
};

struct LeCamRow {
  std::int64_t k = 0;
  std::size_t boundary_exclusions = 0;
  /// Standardized by the true Fisher information Gamma(theta0).
  TvSummary oracle;
  /// Standardized by the plug-in Gamma(mu_k).
  TvSummary plugin;
  /// Median of alpha_k / sqrt(k Gamma(theta0)).
  double scale_ratio_median = 0.0;
  /// Per-run distances in run order; NaN marks a boundary exclusion.
  std::vector<double> tv_oracle;
  std::vector<double> tv_plugin;
};

struct LeCamSettings {
  double theta0 = 0.5;
  std::vector<std::int64_t> k_grid;
  std::size_t runs = 200;
  std::uint64_t seed = 0;
  /// Centre at mu_k + center_shift / k.
  double center_shift = 0.0;
  double threshold = 0.1;
};

struct LeCamReport {
  double theta0 = 0.0;
  std::string prior;
  std::vector<std::int64_t> k_grid;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  double threshold = 0.1;
  std::string generator = kGeneratorName;
  std::vector<LeCamRow> rows;
};

namespace detail {

/// Linear-interpolation quantile of sorted data.
inline double sorted_quantile(std::span<const double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline TvSummary summarize(std::span<const double> tvs, double threshold) {
  std::vector<double> v;
  for (double x : tvs) {
    if (!std::isnan(x)) v.push_back(x);
  }
  std::sort(v.begin(), v.end());
  TvSummary s;
  s.median = sorted_quantile(v, 0.5);
  s.p90 = sorted_quantile(v, 0.9);
  s.frac_below = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x < threshold; })) /
                 static_cast<double>(v.size());
  return s;
}

}  // namespace detail

/// Run r draws one Bernoulli(theta0) sequence from stream r of the master seed;
/// the dataset at size k is its first k draws, so the k_grid rows of a run are
/// nested. Each dataset is compared with the standard normal after centring at
/// mu_k and scaling by sqrt(k Gamma).
inline LeCamReport tv_consistency_experiment(const PriorSpec& prior, const LeCamSettings& cfg) {
  require(cfg.theta0 > 0.0 && cfg.theta0 < 1.0, ErrorCode::out_of_domain, "theta0 must be interior");
  require(prior.domain().is_scalar(), ErrorCode::invalid_argument, "experiment needs a scalar prior");
  require(prior.continuous_positive_at(cfg.theta0), ErrorCode::invalid_argument,
          "prior must be continuous and positive at theta0");
  require(!cfg.k_grid.empty() && cfg.runs >= 1, ErrorCode::invalid_argument, "need a k grid and at least one run");
  for (std::size_t i = 0; i < cfg.k_grid.size(); ++i) {
    require(cfg.k_grid[i] >= 1, ErrorCode::invalid_argument, "k must be positive");
    require(i == 0 || cfg.k_grid[i] > cfg.k_grid[i - 1], ErrorCode::invalid_argument, "k grid must be increasing");
  }

  LeCamReport rep;
  rep.theta0 = cfg.theta0;
  rep.prior = prior.describe();
  rep.k_grid = cfg.k_grid;
  rep.runs = cfg.runs;
  rep.seed = cfg.seed;
  rep.threshold = cfg.threshold;

  const std::size_t nk = cfg.k_grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> oracle(nk, std::vector<double>(cfg.runs, nan));
  std::vector<std::vector<double>> plugin(nk, std::vector<double>(cfg.runs, nan));
  std::vector<std::vector<double>> ratio(nk, std::vector<double>(cfg.runs, nan));
  const double gamma0 = fisher_gamma_bernoulli(cfg.theta0).gamma(0, 0);

  parallel_for(cfg.runs, [&](std::size_t r) {
    CounterRng rng(cfg.seed, r);
    std::int64_t drawn = 0;
    std::int64_t s = 0;
    for (std::size_t i = 0; i < nk; ++i) {
      const std::int64_t k = cfg.k_grid[i];
      for (; drawn < k; ++drawn) s += rng.uniform() < cfg.theta0 ? 1 : 0;
      if (s == 0 || s == k) continue;
      const double kd = static_cast<double>(k);
      const double mu = static_cast<double>(s) / kd;
      const double centre = mu + cfg.center_shift / kd;
      const auto post = posterior_build(Binomial(k, s), prior);
      const RescaledPosterior g(post, centre, std::sqrt(kd * gamma0));
      oracle[i][r] = limit_distance(g, Metric::tv).distance;
      const RescaledPosterior gp(post, centre, std::sqrt(kd * fisher_gamma_bernoulli(mu).gamma(0, 0)));
      plugin[i][r] = limit_distance(gp, Metric::tv).distance;
      ratio[i][r] = std::sqrt(kd / (mu * (1.0 - mu))) / std::sqrt(kd * gamma0);
    }
  });

  for (std::size_t i = 0; i < nk; ++i) {
    LeCamRow row;
    row.k = cfg.k_grid[i];
    row.boundary_exclusions =
        static_cast<std::size_t>(std::count_if(oracle[i].begin(), oracle[i].end(), [](double x) { return std::isnan(x); }));
    require(row.boundary_exclusions < cfg.runs, ErrorCode::all_boundary,
            "every run at k = " + std::to_string(row.k) + " hit the boundary");
    row.oracle = detail::summarize(oracle[i], cfg.threshold);
    row.plugin = detail::summarize(plugin[i], cfg.threshold);
    std::vector<double> rv;
    for (double x : ratio[i]) {
      if (!std::isnan(x)) rv.push_back(x);
    }
    std::sort(rv.begin(), rv.end());
    row.scale_ratio_median = detail::sorted_quantile(rv, 0.5);
    row.tv_oracle = std::move(oracle[i]);
    row.tv_plugin = std::move(plugin[i]);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace bvmlab
