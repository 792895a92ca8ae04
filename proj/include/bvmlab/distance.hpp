#pragma once

// Distances between one-dimensional densities and the convergence table of a
// rescaled posterior against its Gaussian limit.

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/estimate.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/parallel.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/rng.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

enum class Metric { tv, sup, kolmogorov };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::tv: return "tv";
    case Metric::sup: return "sup";
    case Metric::kolmogorov: return "kolmogorov";
  }
  return "";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "tv") return Metric::tv;
  if (s == "sup") return Metric::sup;
  if (s == "kolmogorov" || s == "ks") return Metric::kolmogorov;
  fail(ErrorCode::parse, "unknown metric '" + s + "'");
}

struct Extremum {
  double value = 0.0;
  double location = 0.0;
};

namespace detail {

inline constexpr int kSeedGrid = 4097;

inline std::vector<double> seed_grid(double lo, double hi, int points = kSeedGrid) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

template <typename F>
Extremum maximize_on_grid(F&& f, double lo, double hi) {
  const auto grid = seed_grid(lo, hi);
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = grid[best == 0 ? 0 : best - 1];
  const double b = grid[std::min(best + 1, grid.size() - 1)];
  const double x = golden_max(f, a, b, 1e-12 * std::max(1.0, std::fabs(hi - lo)));
  const double fx = f(x);
  return fx >= best_val ? Extremum{fx, x} : Extremum{best_val, grid[best]};
}

}  // namespace detail

/// Total variation 1/2 int |p - q| over [lo, hi]. Sign changes of p - q found
/// on a seed grid are bisected to 1e-10 and used as panel boundaries, so the
/// kinks of |p - q| never sit inside a quadrature panel.
template <typename P, typename Q>
double tv_distance_1d(P&& p, Q&& q, double lo, double hi, std::span<const double> hints = {},
                      const QuadOptions& opts = {}, double norm_tol = 1e-6) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCode::invalid_argument,
          "support must be a finite interval");
  std::vector<double> pts{lo};
  for (double h : hints) {
    if (h > lo && h < hi) pts.push_back(h);
  }
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());

  const double mp = integrate_or_throw(p, pts, opts);
  const double mq = integrate_or_throw(q, pts, opts);
  require(std::fabs(mp - 1.0) <= norm_tol && std::fabs(mq - 1.0) <= norm_tol, ErrorCode::unnormalized_input,
          "densities are not normalized on the support (masses " + std::to_string(mp) + ", " + std::to_string(mq) + ")");

  auto diff = [&](double x) { return p(x) - q(x); };
  const auto grid = detail::seed_grid(lo, hi);
  double prev = diff(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = diff(grid[i]);
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
      double a = grid[i - 1];
      double b = grid[i];
      double fa = prev;
      while (b - a > 1e-10) {
        const double m = 0.5 * (a + b);
        const double fm = diff(m);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      pts.push_back(0.5 * (a + b));
    }
    prev = cur;
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const double total = integrate_or_throw([&](double x) { return std::fabs(diff(x)); }, pts, opts);
  return std::clamp(0.5 * total, 0.0, 1.0);
}

/// sup |p - q| by golden-section refinement around the best seed-grid point.
template <typename P, typename Q>
Extremum sup_distance(P&& p, Q&& q, double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCode::invalid_argument,
          "support must be a finite interval");
  return detail::maximize_on_grid([&](double x) { return std::fabs(p(x) - q(x)); }, lo, hi);
}

/// sup |P - Q| for two CDF evaluators.
template <typename P, typename Q>
Extremum kolmogorov_distance(P&& cdf_p, Q&& cdf_q, double lo, double hi) {
  auto r = sup_distance(cdf_p, cdf_q, lo, hi);
  r.value = std::clamp(r.value, 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Rescaled posterior against its limit

struct DistanceResult {
  double distance = 0.0;
  /// Upper bound on what the truncation to |x| <= 12 can hide.
  double error_budget = 0.0;
};

inline constexpr double kTruncation = 12.0;

/// Distance between two rescaled posteriors sharing a coordinate system.
inline DistanceResult posterior_distance(const RescaledPosterior& g, const RescaledPosterior& h, Metric metric) {
  const double lo = -kTruncation;
  const double hi = kTruncation;
  const double tail = g.tail_mass(kTruncation) + h.tail_mass(kTruncation);
  auto hints = g.breakpoints(lo, hi);
  for (double x : h.breakpoints(lo, hi)) hints.push_back(x);
  for (double x : {0.0, g.support_lo(), g.support_hi(), h.support_lo(), h.support_hi()}) hints.push_back(x);
  DistanceResult out;
  switch (metric) {
    case Metric::tv:
      out.distance = tv_distance_1d([&](double x) { return g.density(x); }, [&](double x) { return h.density(x); }, lo,
                                    hi, hints, {}, 1e-6 + tail);
      out.error_budget = 0.5 * tail;
      break;
    case Metric::sup:
      out.distance = sup_distance([&](double x) { return g.density(x); }, [&](double x) { return h.density(x); }, lo, hi)
                         .value;
      break;
    case Metric::kolmogorov:
      out.distance =
          kolmogorov_distance([&](double x) { return g.cdf(x); }, [&](double x) { return h.cdf(x); }, lo, hi).value;
      out.error_budget = tail;
      break;
  }
  return out;
}

/// Distance between a rescaled posterior and the Gaussian limit of its convention.
inline DistanceResult limit_distance(const RescaledPosterior& g, Metric metric) {
  const double lo = -kTruncation;
  const double hi = kTruncation;
  // Gaussian mass beyond the truncation: 2 Q(12) < 1e-30 in the std convention
  const double limit_tail = g.convention() == Convention::std_normal ? 2.0 * normal_sf(kTruncation)
                                                                      : bvmlab::erfc(kTruncation);
  const double post_tail = g.tail_mass(kTruncation);
  auto hints = g.breakpoints(lo, hi);
  for (double x : {0.0, g.support_lo(), g.support_hi()}) hints.push_back(x);
  DistanceResult out;
  switch (metric) {
    case Metric::tv:
      out.distance = tv_distance_1d([&](double x) { return g.density(x); },
                                    [&](double x) { return g.limit_density(x); }, lo, hi, hints, {},
                                    1e-6 + post_tail);
      out.error_budget = 0.5 * (post_tail + limit_tail);
      break;
    case Metric::sup:
      out.distance = sup_distance([&](double x) { return g.density(x); }, [&](double x) { return g.limit_density(x); },
                                  lo, hi)
                         .value;
      break;
    case Metric::kolmogorov:
      out.distance = kolmogorov_distance([&](double x) { return g.cdf(x); }, [&](double x) { return g.limit_cdf(x); },
                                         lo, hi)
                         .value;
      out.error_budget = post_tail + limit_tail;
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence table

enum class Regime { fixed_frequency, sampled };

inline const char* to_string(Regime r) { return r == Regime::fixed_frequency ? "fixed-frequency" : "sampled"; }

struct ConvergenceRow {
  std::int64_t n = 0;
  std::int64_t s = 0;
  double realized_freq = 0.0;
  /// Missing when the MLE falls on the boundary.
  std::optional<double> distance;
  double error_budget = 0.0;
};

struct ConvergenceReport {
  std::string family = "binomial";
  std::string prior;
  Regime regime = Regime::fixed_frequency;
  /// Nominal frequency (fixed regime) or true parameter (sampled regime).
  double frequency = 0.5;
  Metric metric = Metric::tv;
  Convention convention = Convention::std_normal;
  std::optional<std::uint64_t> seed;
  std::string generator;
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_rate;
  bool strictly_decreasing = false;
  bool rate_in_band = false;

  std::vector<std::int64_t> n_grid() const {
    std::vector<std::int64_t> out;
    for (const auto& r : rows) out.push_back(r.n);
    return out;
  }
};

/// Least-squares slope of log y against log x.
inline double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::invalid_argument, "need at least two points to fit");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, ErrorCode::invalid_argument, "log-log fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, ErrorCode::invalid_argument, "log-log fit needs distinct x values");
  return sxy / sxx;
}

/// a*n rounded half to even.
inline std::int64_t round_half_even(double v) {
  const int old = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(v);
  std::fesetround(old);
  return static_cast<std::int64_t>(r);
}

struct ConvergenceSettings {
  Regime regime = Regime::fixed_frequency;
  double frequency = 0.5;
  Metric metric = Metric::tv;
  Convention convention = Convention::std_normal;
  std::optional<std::uint64_t> seed;
};

/// Binomial data along an n-grid: build, rescale, measure against the limit,
/// then fit the log-log rate over the non-missing rows.
inline ConvergenceReport convergence_table(const PriorSpec& prior, std::span<const std::int64_t> n_grid,
                                           const ConvergenceSettings& cfg) {
  require(!n_grid.empty(), ErrorCode::invalid_argument, "n-grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    require(n_grid[i] >= 1, ErrorCode::invalid_argument, "n-grid entries must be positive");
    require(i == 0 || n_grid[i] > n_grid[i - 1], ErrorCode::invalid_argument, "n-grid must be strictly increasing");
  }
  require(cfg.frequency > 0.0 && cfg.frequency < 1.0, ErrorCode::invalid_argument, "frequency must lie in (0,1)");
  if (cfg.regime == Regime::sampled) {
    require(cfg.seed.has_value(), ErrorCode::invalid_argument, "sampled regime needs a seed");
  }

  ConvergenceReport rep;
  rep.prior = prior.describe();
  rep.regime = cfg.regime;
  rep.frequency = cfg.frequency;
  rep.metric = cfg.metric;
  rep.convention = cfg.convention;
  rep.seed = cfg.seed;
  if (cfg.regime == Regime::sampled) rep.generator = kGeneratorName;
  rep.rows.resize(n_grid.size());

  parallel_for(n_grid.size(), [&](std::size_t i) {
    const std::int64_t n = n_grid[i];
    std::int64_t s = 0;
    if (cfg.regime == Regime::fixed_frequency) {
      s = round_half_even(cfg.frequency * static_cast<double>(n));
    } else {
      CounterRng rng(*cfg.seed, i);
      for (std::int64_t k = 0; k < n; ++k) s += rng.uniform() < cfg.frequency ? 1 : 0;
    }
    ConvergenceRow& row = rep.rows[i];
    row.n = n;
    row.s = s;
    row.realized_freq = static_cast<double>(s) / static_cast<double>(n);
    if (s == 0 || s == n) return;
    const Binomial m(n, s);
    const auto g = rescaled_density(posterior_build(m, prior), mle_closed_form(m), cfg.convention);
    const auto d = limit_distance(g, cfg.metric);
    row.distance = d.distance;
    row.error_budget = d.error_budget;
  });

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : rep.rows) {
    if (r.distance && *r.distance > 0.0) {
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(*r.distance);
    }
  }
  if (xs.size() >= 3) rep.fitted_rate = fit_loglog_slope(xs, ys);
  rep.rate_in_band = rep.fitted_rate && *rep.fitted_rate >= -0.75 && *rep.fitted_rate <= -0.25;
  rep.strictly_decreasing = true;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (!rep.rows[i].distance) {
      rep.strictly_decreasing = false;
    } else if (i > 0 && rep.rows[i - 1].distance && !(*rep.rows[i].distance < *rep.rows[i - 1].distance)) {
      rep.strictly_decreasing = false;
    }
  }
  return rep;
}

/// `n,metric,distance,realized_freq,seed`; missing distances print as `nan`.
inline void write_csv(std::ostream& out, const ConvergenceReport& rep) {
  out << "n,metric,distance,realized_freq,seed\n";
  char buf[160];
  for (const auto& r : rep.rows) {
    const std::string seed = rep.seed ? std::to_string(*rep.seed) : "";
    std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g,%s\n", static_cast<long long>(r.n), to_string(rep.metric),
                  r.distance ? *r.distance : std::numeric_limits<double>::quiet_NaN(), r.realized_freq, seed.c_str());
    out << buf;
  }
}

}  // namespace bvmlab
