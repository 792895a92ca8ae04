#pragma once

// Neyman's testing duality for a simple multinomial hypothesis p:
// the likelihood-ratio test {lambda <= lambda0}, its exact and chi-square
// type-I probabilities, and the posterior event {chi~ >= chi~0}.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/multinomial.hpp"
#include "bvmlab/parallel.hpp"
#include "bvmlab/rng.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

inline constexpr double kEnumerationCap = 1e7;

/// Simple hypothesis p with threshold lambda0 = exp(-chi0^2 / 2).
class TestSetup {
 public:
  static TestSetup from_lambda0(std::int64_t n, std::vector<double> p, double lambda0) {
    require(lambda0 > 0.0 && lambda0 <= 1.0, ErrorCode::invalid_argument, "lambda0 must lie in (0, 1]");
    return TestSetup(n, std::move(p), lambda0, std::sqrt(std::max(0.0, -2.0 * std::log(lambda0))));
  }
  static TestSetup from_chi0(std::int64_t n, std::vector<double> p, double chi0) {
    require(chi0 >= 0.0 && std::isfinite(chi0), ErrorCode::invalid_argument, "chi0 must be finite and nonnegative");
    return TestSetup(n, std::move(p), std::exp(-0.5 * chi0 * chi0), chi0);
  }
  /// Both thresholds given; they must agree within 1e-12.
  static TestSetup from_both(std::int64_t n, std::vector<double> p, double lambda0, double chi0) {
    auto s = from_lambda0(n, std::move(p), lambda0);
    require(std::fabs(std::exp(-0.5 * chi0 * chi0) - lambda0) <= 1e-12, ErrorCode::invalid_argument,
            "lambda0 and chi0 are inconsistent");
    return s;
  }

  int k() const { return static_cast<int>(p_.size()); }
  std::int64_t n() const { return n_; }
  const std::vector<double>& p() const { return p_; }
  double lambda0() const { return lambda0_; }
  double log_lambda0() const { return std::log(lambda0_); }
  double chi0() const { return chi0_; }

  TestSetup with_lambda0(double lambda0) const { return from_lambda0(n_, p_, lambda0); }

 private:
  TestSetup(std::int64_t n, std::vector<double> p, double lambda0, double chi0)
      : n_(n), p_(std::move(p)), lambda0_(lambda0), chi0_(chi0) {
    require(p_.size() >= 2, ErrorCode::invalid_argument, "need at least two categories");
    require(n_ >= 0, ErrorCode::invalid_argument, "n must be nonnegative");
    double sum = 0.0;
    for (double v : p_) {
      require(v > 0.0 && std::isfinite(v), ErrorCode::invalid_argument, "hypothesis probabilities must be positive");
      sum += v;
    }
    require(std::fabs(sum - 1.0) <= 1e-12, ErrorCode::invalid_argument, "hypothesis probabilities must sum to 1");
  }

  std::int64_t n_;
  std::vector<double> p_;
  double lambda0_;
  double chi0_;
};

namespace detail {

inline void check_counts(const TestSetup& setup, std::span<const std::int64_t> counts) {
  require(static_cast<int>(counts.size()) == setup.k(), ErrorCode::count_mismatch,
          "expected " + std::to_string(setup.k()) + " counts");
  std::int64_t sum = 0;
  for (auto c : counts) {
    require(c >= 0, ErrorCode::count_mismatch, "counts must be nonnegative");
    sum += c;
  }
  require(sum == setup.n(), ErrorCode::count_mismatch,
          "counts sum to " + std::to_string(sum) + ", expected n = " + std::to_string(setup.n()));
}

/// log lambda without validation; zero cells contribute nothing.
inline double log_lambda_unchecked(std::span<const double> p, std::span<const std::int64_t> counts, double n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double c = static_cast<double>(counts[i]);
    acc += c * std::log(p[i] * n / c);
  }
  return acc;
}

inline bool in_rejection_region(double log_lambda, double log_lambda0) {
  return log_lambda <= log_lambda0 + 1e-12 * std::max(1.0, std::fabs(log_lambda0));
}

inline double composition_count(std::int64_t n, int k) {
  return std::exp(log_gamma(static_cast<double>(n + k)) - log_gamma(static_cast<double>(k)) -
                  log_gamma(static_cast<double>(n + 1)));
}

/// Multinomial probability; computed in linear space when the coefficient is
/// an exactly representable integer and the power term does not underflow,
/// so small cases come out exact.
inline double multinomial_prob(std::span<const std::int64_t> c, std::span<const double> p, double log_coef,
                               double log_pow) {
  if (log_coef > 36.0 || log_pow < -700.0) return std::exp(log_coef + log_pow);
  double coef = 1.0;
  std::int64_t remaining = 0;
  for (auto ci : c) {
    for (std::int64_t j = 1; j <= ci; ++j) coef = coef * static_cast<double>(++remaining) / static_cast<double>(j);
  }
  double pw = 1.0;
  for (std::size_t i = 0; i < c.size(); ++i) pw *= std::pow(p[i], static_cast<double>(c[i]));
  return std::round(coef) * pw;
}

}  // namespace detail

/// log lambda = sum n_i log(p_i / q_i), q_i = n_i / n, with 0^0 = 1.
inline double log_likelihood_ratio(const TestSetup& setup, std::span<const std::int64_t> counts) {
  detail::check_counts(setup, counts);
  const double ll = detail::log_lambda_unchecked(setup.p(), counts, static_cast<double>(setup.n()));
  require(ll <= 1e-9 * std::max(1.0, static_cast<double>(setup.n())), ErrorCode::spec_violation,
          "likelihood ratio exceeds 1");
  return std::min(ll, 0.0);
}

inline double likelihood_ratio(const TestSetup& setup, std::span<const std::int64_t> counts) {
  return std::exp(log_likelihood_ratio(setup, counts));
}

/// P_p(lambda <= lambda0) by enumerating every composition of n into k cells.
/// Ties within a relative 1e-12 of lambda0 count as rejections.
inline double exact_type1(const TestSetup& setup) {
  const int k = setup.k();
  const std::int64_t n = setup.n();
  const double compositions = detail::composition_count(n, k);
  require(compositions <= kEnumerationCap, ErrorCode::feasibility_guard,
          "exact enumeration needs " + detail::fmt_num(std::round(compositions)) +
              " compositions, above the 1e7 cap");
  std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i) log_fact[static_cast<std::size_t>(i)] = log_factorial(i);
  std::vector<double> log_p(setup.p().size());
  for (std::size_t i = 0; i < log_p.size(); ++i) log_p[i] = std::log(setup.p()[i]);
  const double log_lambda0 = setup.log_lambda0();
  const double nd = static_cast<double>(n);

  // one task per value of the first cell; the rest is enumerated depth-first
  std::vector<double> partial(static_cast<std::size_t>(n) + 1, 0.0);
  parallel_for(static_cast<std::size_t>(n) + 1, [&](std::size_t first) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(k), 0);
    c[0] = static_cast<std::int64_t>(first);
    double acc = 0.0;
    auto visit = [&](auto&& self, int pos, std::int64_t left) -> void {
      if (pos == k - 1) {
        c[static_cast<std::size_t>(pos)] = left;
        if (!detail::in_rejection_region(detail::log_lambda_unchecked(setup.p(), c, nd), log_lambda0)) return;
        double log_coef = log_fact[static_cast<std::size_t>(n)];
        double log_pow = 0.0;
        for (int i = 0; i < k; ++i) {
          const auto ci = c[static_cast<std::size_t>(i)];
          log_coef -= log_fact[static_cast<std::size_t>(ci)];
          log_pow += static_cast<double>(ci) * log_p[static_cast<std::size_t>(i)];
        }
        acc += detail::multinomial_prob(c, setup.p(), log_coef, log_pow);
        return;
      }
      for (std::int64_t v = 0; v <= left; ++v) {
        c[static_cast<std::size_t>(pos)] = v;
        self(self, pos + 1, left - v);
      }
    };
    visit(visit, 1, n - c[0]);
    partial[first] = acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return std::min(total, 1.0);
}

/// Pearson's statistic sum (n_i - p_i n)^2 / (p_i n).
inline double chi2_stat(const TestSetup& setup, std::span<const std::int64_t> counts) {
  detail::check_counts(setup, counts);
  const double n = static_cast<double>(setup.n());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = setup.p()[i] * n;
    const double d = static_cast<double>(counts[i]) - e;
    acc += d * d / e;
  }
  return acc;
}

/// Neyman's statistic sum (n_i - p_i n)^2 / n_i.
inline double chi2_tilde(const TestSetup& setup, std::span<const std::int64_t> counts) {
  detail::check_counts(setup, counts);
  const double n = static_cast<double>(setup.n());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] > 0, ErrorCode::zero_count, "chi-tilde needs every count positive");
    const double d = static_cast<double>(counts[i]) - setup.p()[i] * n;
    acc += d * d / static_cast<double>(counts[i]);
  }
  return acc;
}

/// Chi distribution tail with k - 1 degrees of freedom: Q((k-1)/2, chi0^2/2).
inline double pearson_tail(int k, double chi0) {
  require(k >= 2, ErrorCode::invalid_argument, "need at least two categories");
  require(chi0 >= 0.0, ErrorCode::invalid_argument, "chi0 must be nonnegative");
  if (chi0 == 0.0) return 1.0;
  if (std::isinf(chi0)) return 0.0;
  return gamma_q(0.5 * (k - 1), 0.5 * chi0 * chi0);
}

inline double chi2_approx_type1(const TestSetup& setup) { return pearson_tail(setup.k(), setup.chi0()); }

struct PosteriorTestOptions {
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = 0;
};

/// Posterior probability of sum (n_i - p_i n)^2 / n_i >= chi0^2 with p drawn
/// from the multinomial posterior; batch-mean standard error.
inline MonteCarloEstimate posterior_test_prob(const TestSetup& setup, std::span<const std::int64_t> counts,
                                              const PriorSpec& prior, const PosteriorTestOptions& opts) {
  detail::check_counts(setup, counts);
  require(setup.k() <= kMaxCategories, ErrorCode::dimension_cap, "at most 4 categories are supported");
  for (auto c : counts) require(c > 0, ErrorCode::zero_count, "every category needs a positive count");
  std::vector<double> q(counts.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(counts[i]) / static_cast<double>(setup.n());
  require(prior.continuous_positive_at(std::span<const double>(q.data(), q.size() - 1)), ErrorCode::invalid_argument,
          "prior must be continuous and positive at the observed frequencies");
  require(opts.samples >= kBatches, ErrorCode::invalid_argument, "need at least one draw per batch");

  const double threshold = setup.chi0() * setup.chi0();
  if (threshold == 0.0) return {1.0, 0.0};
  const SimplexPosteriorSampler sampler(counts, prior);
  const double n = static_cast<double>(setup.n());
  std::vector<double> hits(kBatches, 0.0);
  std::vector<std::size_t> drawn(kBatches, 0);
  std::vector<std::size_t> tries(kBatches, 0);
  parallel_for(kBatches, [&](std::size_t b) {
    CounterRng rng(opts.seed, b);
    std::vector<double> x(counts.size());
    const std::size_t m = detail::batch_size(opts.samples, b);
    for (std::size_t j = 0; j < m; ++j) {
      tries[b] += sampler.draw(rng, x);
      double stat = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(counts[i]) - x[i] * n;
        stat += d * d / static_cast<double>(counts[i]);
      }
      if (stat >= threshold) hits[b] += 1.0;
    }
    drawn[b] = m;
  });
  std::size_t total_tries = 0;
  for (auto t : tries) total_tries += t;
  require(static_cast<double>(opts.samples) >= 1e-4 * static_cast<double>(total_tries), ErrorCode::envelope_failure,
          "rejection sampler acceptance fell below 1e-4");
  return detail::batch_summary(hits, drawn);
}

struct DualityRecord {
  std::int64_t n = 0;
  int k = 0;
  double lambda0 = 0.0;
  double log_lambda0 = 0.0;
  std::optional<double> exact_p;
  double chi2_p = 0.0;
  double posterior_p = 0.0;
  double posterior_se = 0.0;
  /// |frequentist P - posterior P|, exact when enumeration is feasible.
  double gap = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

/// Frequentist and posterior probabilities at a given threshold.
inline DualityRecord duality_at(const TestSetup& setup, std::span<const std::int64_t> counts, const PriorSpec& prior,
                                const PosteriorTestOptions& opts) {
  DualityRecord r;
  r.n = setup.n();
  r.k = setup.k();
  r.lambda0 = setup.lambda0();
  r.log_lambda0 = setup.log_lambda0();
  if (detail::composition_count(setup.n(), setup.k()) <= kEnumerationCap) r.exact_p = exact_type1(setup);
  r.chi2_p = chi2_approx_type1(setup);
  const auto post = posterior_test_prob(setup, counts, prior, opts);
  r.posterior_p = post.estimate;
  r.posterior_se = post.std_error;
  r.gap = std::fabs(r.exact_p.value_or(r.chi2_p) - r.posterior_p);
  r.seed = opts.seed;
  r.samples = opts.samples;
  return r;
}

/// The duality at lambda0 = lambda of the observed sample.
inline DualityRecord duality_report(std::int64_t n, std::vector<double> p, std::span<const std::int64_t> counts,
                                    const PriorSpec& prior, const PosteriorTestOptions& opts) {
  const auto probe = TestSetup::from_lambda0(n, std::move(p), 1.0);
  const double log_lambda = log_likelihood_ratio(probe, counts);
  const auto setup = TestSetup::from_chi0(n, probe.p(), std::sqrt(-2.0 * log_lambda));
  return duality_at(setup, counts, prior, opts);
}

inline void write_duality_csv_header(std::ostream& out) {
  out << "n,k,lambda0,exact_P,chi2_P,posterior_P,posterior_se,gap\n";
}

inline void write_duality_csv_row(std::ostream& out, const DualityRecord& r) {
  out << r.n << ',' << r.k << ',' << detail::fmt_num(r.lambda0) << ','
      << (r.exact_p ? detail::fmt_num(*r.exact_p) : std::string("nan")) << ',' << detail::fmt_num(r.chi2_p) << ','
      << detail::fmt_num(r.posterior_p) << ',' << detail::fmt_num(r.posterior_se) << ',' << detail::fmt_num(r.gap)
      << '\n';
}

}  // namespace bvmlab
