#pragma once

// Parameter domains, observation models with their sufficient statistics,
// log-likelihoods and the prior family.
//
// Binomial and multinomial data are taken with respect to counting measure,
// location data with respect to Lebesgue measure. The multinomial parameter
// is the free vector (p_1, ..., p_{t-1}) with p_t = 1 - sum.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

// ---------------------------------------------------------------------------
// Domains

class ParamDomain {
 public:
  enum class Kind { open_interval, simplex, real_line };

  static ParamDomain open_interval(double lo, double hi) {
    require(lo < hi, ErrorCode::invalid_argument, "open interval requires lo < hi");
    ParamDomain d;
    d.kind_ = Kind::open_interval;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }
  static ParamDomain unit_interval() { return open_interval(0.0, 1.0); }
  static ParamDomain simplex(int t) {
    require(t >= 2, ErrorCode::invalid_argument, "simplex requires t >= 2");
    ParamDomain d;
    d.kind_ = Kind::simplex;
    d.t_ = t;
    return d;
  }
  static ParamDomain real_line() {
    ParamDomain d;
    d.kind_ = Kind::real_line;
    return d;
  }

  Kind kind() const { return kind_; }
  bool is_scalar() const { return kind_ != Kind::simplex; }
  /// Lower/upper ends of a scalar domain (infinite for the real line).
  double lo() const { return kind_ == Kind::open_interval ? lo_ : -std::numeric_limits<double>::infinity(); }
  double hi() const { return kind_ == Kind::open_interval ? hi_ : std::numeric_limits<double>::infinity(); }
  /// Category count t of a simplex domain; the parameter has t - 1 free coordinates.
  int categories() const { return t_; }
  int dimension() const { return kind_ == Kind::simplex ? t_ - 1 : 1; }

  bool interior(double theta) const {
    require(is_scalar(), ErrorCode::invalid_argument, "scalar point given for a simplex domain");
    if (!std::isfinite(theta)) return false;
    return kind_ == Kind::real_line || (theta > lo_ && theta < hi_);
  }

  /// Interior test for the free simplex coordinates: all x_i > 0 and sum < 1.
  bool interior(std::span<const double> x) const {
    if (is_scalar()) return x.size() == 1 && interior(x[0]);
    if (static_cast<int>(x.size()) != t_ - 1) return false;
    double sum = 0.0;
    for (double v : x) {
      if (!(v > 0.0)) return false;
      sum += v;
    }
    return sum < 1.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::open_interval: return "(" + std::to_string(lo_) + "," + std::to_string(hi_) + ")";
      case Kind::simplex: return "simplex(t=" + std::to_string(t_) + ")";
      case Kind::real_line: return "real-line";
    }
    return "";
  }

 private:
  ParamDomain() = default;
  Kind kind_ = Kind::real_line;
  double lo_ = 0.0;
  double hi_ = 0.0;
  int t_ = 0;
};

// ---------------------------------------------------------------------------
// Error laws for the location family, density proportional to exp(-psi(x^2)).

class ErrorLaw {
 public:
  enum class Kind { gaussian, double_exponential };

  static ErrorLaw gaussian(double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_argument, "gaussian scale must be positive");
    return ErrorLaw(Kind::gaussian, sigma);
  }
  static ErrorLaw double_exponential(double b) {
    require(b > 0.0 && std::isfinite(b), ErrorCode::invalid_argument, "double-exponential scale must be positive");
    return ErrorLaw(Kind::double_exponential, b);
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  bool smooth() const { return kind_ == Kind::gaussian; }

  /// psi(u) with log f(x) = -psi(x^2); monotone increasing in u >= 0.
  double psi(double u) const {
    if (kind_ == Kind::gaussian) return u / (2.0 * scale_ * scale_) + std::log(scale_) + kLogSqrt2Pi;
    return std::sqrt(u) / scale_ + std::log(2.0 * scale_);
  }

  double log_density(double x) const { return -psi(x * x); }
  double density(double x) const { return std::exp(log_density(x)); }

  /// d/dx log f(x); the double-exponential law uses the sign subgradient.
  double dlog_density(double x) const {
    if (kind_ == Kind::gaussian) return -x / (scale_ * scale_);
    return x > 0.0 ? -1.0 / scale_ : (x < 0.0 ? 1.0 / scale_ : 0.0);
  }
  /// d^2/dx^2 log f(x); zero almost everywhere for the double-exponential law.
  double d2log_density(double) const { return kind_ == Kind::gaussian ? -1.0 / (scale_ * scale_) : 0.0; }

  std::string describe() const {
    return (kind_ == Kind::gaussian ? "gaussian:" : "double-exponential:") + format_scale();
  }

 private:
  ErrorLaw(Kind k, double s) : kind_(k), scale_(s) {}
  std::string format_scale() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", scale_);
    return buf;
  }
  Kind kind_;
  double scale_;
};

// ---------------------------------------------------------------------------
// Observation models

class Binomial {
 public:
  Binomial(std::int64_t n, std::int64_t s) : n_(n), s_(s) {
    require(n >= 0, ErrorCode::invalid_argument, "binomial requires n >= 0");
    require(s >= 0 && s <= n, ErrorCode::invalid_argument, "binomial requires 0 <= s <= n");
  }
  std::int64_t n() const { return n_; }
  std::int64_t s() const { return s_; }
  double frequency() const { return n_ > 0 ? static_cast<double>(s_) / static_cast<double>(n_) : 0.0; }
  ParamDomain domain() const { return ParamDomain::unit_interval(); }
  bool operator==(const Binomial&) const = default;

 private:
  std::int64_t n_;
  std::int64_t s_;
};

class Multinomial {
 public:
  explicit Multinomial(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    require(counts_.size() >= 2, ErrorCode::invalid_argument, "multinomial requires t >= 2 categories");
    for (auto c : counts_) require(c >= 0, ErrorCode::invalid_argument, "multinomial counts must be nonnegative");
    n_ = std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
  }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  int categories() const { return static_cast<int>(counts_.size()); }
  std::int64_t n() const { return n_; }
  std::vector<double> frequencies() const {
    std::vector<double> q(counts_.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
    return q;
  }
  ParamDomain domain() const { return ParamDomain::simplex(categories()); }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

class Location {
 public:
  Location(std::vector<double> observations, ErrorLaw law) : x_(std::move(observations)), law_(law) {
    for (double v : x_) require(std::isfinite(v), ErrorCode::invalid_argument, "location observations must be finite");
  }
  const std::vector<double>& observations() const { return x_; }
  const ErrorLaw& law() const { return law_; }
  std::int64_t n() const { return static_cast<std::int64_t>(x_.size()); }
  ParamDomain domain() const { return ParamDomain::real_line(); }

 private:
  std::vector<double> x_;
  ErrorLaw law_;
};

using ObservationModel = std::variant<Binomial, Multinomial, Location>;

inline ParamDomain domain_of(const ObservationModel& m) {
  return std::visit([](const auto& x) { return x.domain(); }, m);
}

inline std::int64_t sample_size(const ObservationModel& m) {
  return std::visit([](const auto& x) { return x.n(); }, m);
}

// ---------------------------------------------------------------------------
// Log-likelihoods

inline double log_likelihood(const Binomial& m, double theta) {
  require(theta > 0.0 && theta < 1.0, ErrorCode::domain_boundary, "binomial parameter must lie in (0,1)");
  const double s = static_cast<double>(m.s());
  const double f = static_cast<double>(m.n() - m.s());
  return (s > 0 ? s * std::log(theta) : 0.0) + (f > 0 ? f * std::log1p(-theta) : 0.0);
}

/// Multinomial log-likelihood at the free coordinates p_1..p_{t-1}.
inline double log_likelihood(const Multinomial& m, std::span<const double> p) {
  require(m.domain().interior(p), ErrorCode::domain_boundary, "multinomial parameter must be interior to the simplex");
  const auto& c = m.counts();
  double last = 1.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    last -= p[i];
    if (c[i] > 0) ll += static_cast<double>(c[i]) * std::log(p[i]);
  }
  if (c.back() > 0) ll += static_cast<double>(c.back()) * std::log(last);
  return ll;
}

inline double log_likelihood(const Location& m, double a) {
  require(std::isfinite(a), ErrorCode::domain_boundary, "location parameter must be finite");
  double ll = 0.0;
  for (double x : m.observations()) ll += m.law().log_density(x - a);
  return ll;
}

inline double log_likelihood(const ObservationModel& model, std::span<const double> theta) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Multinomial>) {
          return log_likelihood(m, theta);
        } else {
          require(theta.size() == 1, ErrorCode::invalid_argument, "scalar model needs a one-dimensional parameter");
          return log_likelihood(m, theta[0]);
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Priors

namespace prior_kind {
struct Uniform {};
struct Beta {
  double a;
  double b;
};
struct TruncatedGaussian {
  double mu;
  double sigma;
};
struct PiecewiseLinear {
  std::vector<std::pair<double, double>> knots;  // (theta, density), sorted by theta
};
struct Dirichlet {
  std::vector<double> alpha;
};
}  // namespace prior_kind

using PriorKind = std::variant<prior_kind::Uniform, prior_kind::Beta, prior_kind::TruncatedGaussian,
                               prior_kind::PiecewiseLinear, prior_kind::Dirichlet>;

/// A proper prior bound to a parameter domain.
///
/// On scalar domains the kinds have their usual meaning (beta only on (0,1);
/// truncated-gaussian renormalized to the domain; piecewise-linear normalized
/// to unit area at construction and zero outside its knots). On a simplex,
/// uniform and dirichlet are the Dirichlet family, while beta and
/// piecewise-linear act as a product kernel prod_{i=1..t} g(x_i) over all t
/// coordinates, normalized by simplex quadrature at construction.
class PriorSpec {
 public:
  PriorSpec(PriorKind kind, ParamDomain domain) : kind_(std::move(kind)), domain_(domain) { validate(); }

  static PriorSpec uniform(ParamDomain d = ParamDomain::unit_interval()) { return {prior_kind::Uniform{}, d}; }
  static PriorSpec beta(double a, double b) { return {prior_kind::Beta{a, b}, ParamDomain::unit_interval()}; }
  static PriorSpec truncated_gaussian(double mu, double sigma, ParamDomain d = ParamDomain::unit_interval()) {
    return {prior_kind::TruncatedGaussian{mu, sigma}, d};
  }
  static PriorSpec piecewise_linear(std::vector<std::pair<double, double>> knots,
                                    ParamDomain d = ParamDomain::unit_interval()) {
    return {prior_kind::PiecewiseLinear{std::move(knots)}, d};
  }
  static PriorSpec dirichlet(std::vector<double> alpha) {
    const int t = static_cast<int>(alpha.size());
    return {prior_kind::Dirichlet{std::move(alpha)}, ParamDomain::simplex(std::max(t, 2))};
  }

  const PriorKind& kind() const { return kind_; }
  const ParamDomain& domain() const { return domain_; }

  /// Dirichlet concentration when the prior is in the Dirichlet family.
  std::optional<std::vector<double>> dirichlet_alpha() const {
    if (domain_.is_scalar()) return std::nullopt;
    if (std::holds_alternative<prior_kind::Uniform>(kind_)) {
      return std::vector<double>(static_cast<std::size_t>(domain_.categories()), 1.0);
    }
    if (const auto* d = std::get_if<prior_kind::Dirichlet>(&kind_)) return d->alpha;
    return std::nullopt;
  }

  double log_density(double theta) const {
    require(domain_.is_scalar(), ErrorCode::invalid_argument, "scalar evaluation of a simplex prior");
    require(!std::isnan(theta), ErrorCode::out_of_domain, "prior evaluated at NaN");
    if (!(theta >= domain_.lo() && theta <= domain_.hi())) {
      fail(ErrorCode::out_of_domain, "prior evaluated outside its domain");
    }
    return scalar_log_kernel(theta) - log_norm_;
  }

  double density(double theta) const { return std::exp(log_density(theta)); }

  /// Density on the simplex at the free coordinates; zero off the open simplex.
  double log_density(std::span<const double> x) const {
    if (domain_.is_scalar()) {
      require(x.size() == 1, ErrorCode::out_of_domain, "scalar prior needs a one-dimensional point");
      return log_density(x[0]);
    }
    require(static_cast<int>(x.size()) == domain_.dimension(), ErrorCode::out_of_domain,
            "simplex point has the wrong dimension");
    if (!domain_.interior(x)) return -std::numeric_limits<double>::infinity();
    return simplex_log_kernel(x) - log_norm_;
  }

  double density(std::span<const double> x) const { return std::exp(log_density(x)); }

  /// Supremum of the density when it is bounded.
  std::optional<double> sup_density() const { return sup_; }

  /// True when the density is continuous at theta0 and strictly positive there.
  bool continuous_positive_at(double theta0) const {
    if (!domain_.is_scalar() || !domain_.interior(theta0)) return false;
    if (const auto* p = std::get_if<prior_kind::PiecewiseLinear>(&kind_)) {
      if (!(theta0 > p->knots.front().first && theta0 < p->knots.back().first)) return false;
    }
    return density(theta0) > 0.0;
  }

  bool continuous_positive_at(std::span<const double> x) const {
    if (domain_.is_scalar()) return x.size() == 1 && continuous_positive_at(x[0]);
    if (!domain_.interior(x)) return false;
    if (std::holds_alternative<prior_kind::PiecewiseLinear>(kind_)) {
      const auto& knots = std::get<prior_kind::PiecewiseLinear>(kind_).knots;
      double last = 1.0;
      for (double v : x) {
        last -= v;
        if (!(v > knots.front().first && v < knots.back().first)) return false;
      }
      if (!(last > knots.front().first && last < knots.back().first)) return false;
    }
    return density(x) > 0.0;
  }

  /// Canonical text key, e.g. "beta:2,5".
  std::string describe() const;

 private:
  void validate();
  double scalar_log_kernel(double theta) const;
  double simplex_log_kernel(std::span<const double> x) const;

  PriorKind kind_;
  ParamDomain domain_;
  double log_norm_ = 0.0;
  std::optional<double> sup_;
};

namespace detail {

inline double pwl_value(const std::vector<std::pair<double, double>>& knots, double x) {
  if (x < knots.front().first || x > knots.back().first) return 0.0;
  auto it = std::upper_bound(knots.begin(), knots.end(), x,
                             [](double v, const std::pair<double, double>& k) { return v < k.first; });
  if (it == knots.end()) return knots.back().second;
  if (it == knots.begin()) return knots.front().second;
  const auto& [x1, y1] = *it;
  const auto& [x0, y0] = *(it - 1);
  if (x1 == x0) return y1;
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Nested adaptive quadrature of f over the open simplex in t-1 free coordinates.
template <typename F>
double integrate_simplex(F&& f, int t, std::span<const double> breaks, const QuadOptions& opts) {
  const int dim = t - 1;
  std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
  auto panels = [&](double hi) {
    std::vector<double> pts{0.0};
    for (double b : breaks) {
      if (b > 0.0 && b < hi) pts.push_back(b);
    }
    pts.push_back(hi);
    return pts;
  };
  auto level = [&](auto&& self, int i, double remaining) -> double {
    if (remaining <= 0.0) return 0.0;
    auto inner = [&](double v) {
      x[static_cast<std::size_t>(i)] = v;
      if (i + 1 == dim) return f(std::span<const double>(x));
      return self(self, i + 1, remaining - v);
    };
    const auto pts = panels(remaining);
    return integrate_or_throw(inner, std::span<const double>(pts), opts);
  };
  return level(level, 0, 1.0);
}

}  // namespace detail

inline void PriorSpec::validate() {
  using namespace prior_kind;
  const bool scalar = domain_.is_scalar();
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Uniform>) {
          if (scalar) {
            require(domain_.kind() == ParamDomain::Kind::open_interval, ErrorCode::invalid_argument,
                    "uniform prior on the real line is improper");
            log_norm_ = std::log(domain_.hi() - domain_.lo());
            sup_ = 1.0 / (domain_.hi() - domain_.lo());
          } else {
            // Dirichlet(1,...,1): density (t-1)! on the simplex
            log_norm_ = -log_gamma(static_cast<double>(domain_.categories()));
            sup_ = std::exp(-log_norm_);
          }
        } else if constexpr (std::is_same_v<K, Beta>) {
          require(k.a > 0.0 && k.b > 0.0 && std::isfinite(k.a) && std::isfinite(k.b), ErrorCode::invalid_argument,
                  "beta prior requires positive finite parameters");
          if (scalar) {
            require(domain_.kind() == ParamDomain::Kind::open_interval && domain_.lo() == 0.0 && domain_.hi() == 1.0,
                    ErrorCode::invalid_argument, "beta prior lives on (0,1)");
            log_norm_ = log_beta(k.a, k.b);
            if (k.a >= 1.0 && k.b >= 1.0) {
              const double mode = (k.a + k.b > 2.0) ? (k.a - 1.0) / (k.a + k.b - 2.0) : 0.5;
              sup_ = std::exp(scalar_log_kernel(mode) - log_norm_);
            }
          } else {
            require(k.a >= 1.0 && k.b >= 1.0, ErrorCode::invalid_argument,
                    "product beta kernel on the simplex needs a, b >= 1");
          }
        } else if constexpr (std::is_same_v<K, TruncatedGaussian>) {
          require(k.sigma > 0.0 && std::isfinite(k.sigma) && std::isfinite(k.mu), ErrorCode::invalid_argument,
                  "truncated gaussian requires finite mu and sigma > 0");
          require(scalar, ErrorCode::invalid_argument, "truncated gaussian prior needs a scalar domain");
          const double mass = normal_cdf((domain_.hi() - k.mu) / k.sigma) - normal_cdf((domain_.lo() - k.mu) / k.sigma);
          require(mass > 0.0, ErrorCode::invalid_argument, "truncated gaussian has no mass on the domain");
          log_norm_ = std::log(mass) + std::log(k.sigma) + kLogSqrt2Pi;
          const double peak = std::clamp(k.mu, domain_.lo(), domain_.hi());
          sup_ = std::exp(scalar_log_kernel(peak) - log_norm_);
        } else if constexpr (std::is_same_v<K, PiecewiseLinear>) {
          auto& knots = const_cast<PiecewiseLinear&>(k).knots;
          require(knots.size() >= 2, ErrorCode::invalid_argument, "piecewise-linear prior needs at least two knots");
          std::stable_sort(knots.begin(), knots.end(),
                           [](const auto& l, const auto& r) { return l.first < r.first; });
          double area = 0.0;
          double peak = 0.0;
          for (std::size_t i = 0; i < knots.size(); ++i) {
            require(std::isfinite(knots[i].first) && std::isfinite(knots[i].second) && knots[i].second >= 0.0,
                    ErrorCode::invalid_argument, "piecewise-linear knots need finite nonnegative densities");
            peak = std::max(peak, knots[i].second);
            if (i > 0) area += 0.5 * (knots[i].second + knots[i - 1].second) * (knots[i].first - knots[i - 1].first);
          }
          if (scalar) {
            require(knots.front().first >= domain_.lo() && knots.back().first <= domain_.hi(),
                    ErrorCode::invalid_argument, "piecewise-linear knots must lie in the domain");
            require(area > 0.0, ErrorCode::invalid_argument, "piecewise-linear prior has zero area");
            log_norm_ = std::log(area);
            sup_ = peak / area;
          } else {
            require(knots.front().first >= 0.0 && knots.back().first <= 1.0, ErrorCode::invalid_argument,
                    "piecewise-linear simplex kernel must live on [0,1]");
          }
        } else if constexpr (std::is_same_v<K, Dirichlet>) {
          require(!scalar, ErrorCode::invalid_argument, "dirichlet prior needs a simplex domain");
          require(static_cast<int>(k.alpha.size()) == domain_.categories(), ErrorCode::invalid_argument,
                  "dirichlet concentration length must equal the category count");
          double a0 = 0.0;
          bool bounded = true;
          for (double a : k.alpha) {
            require(a > 0.0 && std::isfinite(a), ErrorCode::invalid_argument, "dirichlet concentration must be positive");
            a0 += a;
            bounded = bounded && a >= 1.0;
          }
          log_norm_ = -log_gamma(a0);
          for (double a : k.alpha) log_norm_ += log_gamma(a);
          if (bounded) {
            // mode (alpha_i - 1)/(a0 - t) when a0 > t; flat otherwise
            const int t = domain_.categories();
            std::vector<double> mode(static_cast<std::size_t>(t - 1));
            for (int i = 0; i + 1 < t; ++i) {
              mode[static_cast<std::size_t>(i)] =
                  a0 > t ? (k.alpha[static_cast<std::size_t>(i)] - 1.0) / (a0 - t) : 1.0 / t;
            }
            double last = 1.0;
            for (double v : mode) last -= v;
            bool interior = last > 0.0;
            for (double v : mode) interior = interior && v > 0.0;
            if (interior) {
              sup_ = std::exp(simplex_log_kernel(mode) - log_norm_);
            } else {
              // mode on a face: evaluate the kernel's limit there
              double lk = 0.0;
              for (int i = 0; i + 1 < t; ++i) {
                const double a = k.alpha[static_cast<std::size_t>(i)];
                if (a > 1.0) lk += (a - 1.0) * std::log(mode[static_cast<std::size_t>(i)]);
              }
              if (k.alpha.back() > 1.0) lk += (k.alpha.back() - 1.0) * std::log(last);
              sup_ = std::exp(lk - log_norm_);
            }
          }
        }
      },
      kind_);

  // Product kernels on the simplex are normalized by nested quadrature.
  if (!scalar && !dirichlet_alpha()) {
    std::vector<double> breaks;
    if (const auto* p = std::get_if<PiecewiseLinear>(&kind_)) {
      for (const auto& kn : p->knots) breaks.push_back(kn.first);
    }
    QuadOptions opts;
    opts.abs_tol = 1e-13;
    opts.rel_tol = 1e-11;
    const double z = detail::integrate_simplex([&](std::span<const double> x) { return std::exp(simplex_log_kernel(x)); },
                                               domain_.categories(), breaks, opts);
    require(z > 0.0, ErrorCode::invalid_argument, "product prior has zero mass on the simplex");
    log_norm_ = std::log(z);
    double peak = 0.0;
    if (const auto* p = std::get_if<PiecewiseLinear>(&kind_)) {
      for (const auto& kn : p->knots) peak = std::max(peak, kn.second);
    } else {
      const auto& b = std::get<Beta>(kind_);
      const double mode = (b.a + b.b > 2.0) ? (b.a - 1.0) / (b.a + b.b - 2.0) : 0.5;
      peak = std::pow(mode, b.a - 1.0) * std::pow(1.0 - mode, b.b - 1.0);
    }
    sup_ = std::pow(peak, domain_.categories()) / z;
  }
}

inline double PriorSpec::scalar_log_kernel(double theta) const {
  using namespace prior_kind;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Uniform>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, Beta>) {
          if (theta <= 0.0 || theta >= 1.0) {
            // closed-interval endpoints: finite only when the exponent vanishes
            const double e = theta <= 0.0 ? k.a - 1.0 : k.b - 1.0;
            if (e == 0.0) return 0.0;
            return e > 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
          }
          return (k.a - 1.0) * std::log(theta) + (k.b - 1.0) * std::log1p(-theta);
        } else if constexpr (std::is_same_v<K, TruncatedGaussian>) {
          const double z = (theta - k.mu) / k.sigma;
          return -0.5 * z * z;
        } else if constexpr (std::is_same_v<K, PiecewiseLinear>) {
          return std::log(detail::pwl_value(k.knots, theta));
        } else {
          return -std::numeric_limits<double>::infinity();
        }
      },
      kind_);
}

inline double PriorSpec::simplex_log_kernel(std::span<const double> x) const {
  using namespace prior_kind;
  double last = 1.0;
  for (double v : x) last -= v;
  auto coord = [&](std::size_t i) { return i < x.size() ? x[i] : last; };
  const std::size_t t = x.size() + 1;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Uniform>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, Dirichlet>) {
          double lk = 0.0;
          for (std::size_t i = 0; i < t; ++i) lk += (k.alpha[i] - 1.0) * std::log(coord(i));
          return lk;
        } else if constexpr (std::is_same_v<K, Beta>) {
          double lk = 0.0;
          for (std::size_t i = 0; i < t; ++i) lk += (k.a - 1.0) * std::log(coord(i)) + (k.b - 1.0) * std::log1p(-coord(i));
          return lk;
        } else if constexpr (std::is_same_v<K, PiecewiseLinear>) {
          double lk = 0.0;
          for (std::size_t i = 0; i < t; ++i) lk += std::log(detail::pwl_value(k.knots, coord(i)));
          return lk;
        } else {
          return -std::numeric_limits<double>::infinity();
        }
      },
      kind_);
}

inline std::string PriorSpec::describe() const {
  using namespace prior_kind;
  using detail::fmt_num;
  return std::visit(
      [&](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Uniform>) {
          return "uniform";
        } else if constexpr (std::is_same_v<K, Beta>) {
          return "beta:" + fmt_num(k.a) + "," + fmt_num(k.b);
        } else if constexpr (std::is_same_v<K, TruncatedGaussian>) {
          return "tnorm:" + fmt_num(k.mu) + "," + fmt_num(k.sigma);
        } else if constexpr (std::is_same_v<K, PiecewiseLinear>) {
          std::string out = "pwl:";
          for (std::size_t i = 0; i < k.knots.size(); ++i) {
            if (i) out += ",";
            out += fmt_num(k.knots[i].first) + ":" + fmt_num(k.knots[i].second);
          }
          return out;
        } else {
          std::string out = "dirichlet:";
          for (std::size_t i = 0; i < k.alpha.size(); ++i) {
            if (i) out += ",";
            out += fmt_num(k.alpha[i]);
          }
          return out;
        }
      },
      kind_);
}

/// Evaluator for pi(theta) of a scalar prior.
inline double prior_density(const PriorSpec& prior, double theta) { return prior.density(theta); }

}  // namespace bvmlab
