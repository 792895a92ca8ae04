#pragma once

// Multinomial posteriors on the simplex and their Gaussian limit in the
// rescaled coordinates z = sqrt(n) (x - a), a = counts / n.
//
// Dirichlet priors give closed forms. Other simplex priors are normalized by
// importance sampling from Dirichlet(counts + 1), which carries the whole
// likelihood, so the weight is just the prior density.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bvmlab/approx.hpp"
#include "bvmlab/error.hpp"
#include "bvmlab/estimate.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/parallel.hpp"
#include "bvmlab/rng.hpp"
#include "bvmlab/special.hpp"

namespace bvmlab {

inline constexpr int kMaxCategories = 4;
inline constexpr std::size_t kDefaultSamples = 1'000'000;
inline constexpr std::size_t kBatches = 100;

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

namespace detail {

/// Draws one Dirichlet(beta) point; all t coordinates are written.
template <typename Rng>
void dirichlet_draw(Rng& rng, std::span<const double> beta, std::span<double> out) {
  double sum = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    std::gamma_distribution<double> g(beta[i], 1.0);
    out[i] = g(rng);
    sum += out[i];
  }
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] /= sum;
}

inline double log_multivariate_beta(std::span<const double> beta) {
  double acc = 0.0;
  double total = 0.0;
  for (double b : beta) {
    acc += log_gamma(b);
    total += b;
  }
  return acc - log_gamma(total);
}

/// Splits `total` draws into kBatches nearly equal batches.
inline std::size_t batch_size(std::size_t total, std::size_t b) {
  return total / kBatches + (b < total % kBatches ? 1 : 0);
}

/// Mean of the batch means and its standard error.
inline MonteCarloEstimate batch_summary(std::span<const double> sums, std::span<const std::size_t> counts) {
  std::vector<double> means;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    if (counts[b] == 0) continue;
    means.push_back(sums[b] / static_cast<double>(counts[b]));
    total += sums[b];
    n += counts[b];
  }
  MonteCarloEstimate out;
  require(n > 0, ErrorCode::invalid_argument, "Monte Carlo needs at least one draw");
  out.estimate = total / static_cast<double>(n);
  if (means.size() > 1) {
    const double m = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    out.std_error = std::sqrt(ss / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
  }
  return out;
}

}  // namespace detail

/// Largest-remainder apportionment of a * n to integers summing to n.
inline std::vector<std::int64_t> apportion(std::span<const double> a, std::int64_t n) {
  require(n >= 0, ErrorCode::invalid_argument, "n must be nonnegative");
  double sum = 0.0;
  for (double v : a) {
    require(v >= 0.0, ErrorCode::invalid_argument, "frequencies must be nonnegative");
    sum += v;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, ErrorCode::invalid_argument, "frequencies must sum to 1");
  std::vector<std::int64_t> out(a.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double exact = a[i] * static_cast<double>(n);
    out[i] = static_cast<std::int64_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

/// Draws from the posterior given counts and a simplex prior: exact Dirichlet
/// draws when the prior is Dirichlet, otherwise rejection from the
/// Dirichlet(counts + 1) envelope with acceptance prior(x) / sup prior.
class SimplexPosteriorSampler {
 public:
  SimplexPosteriorSampler(std::span<const std::int64_t> counts, const PriorSpec& prior) : prior_(prior) {
    for (auto c : counts) require(c > 0, ErrorCode::zero_count, "every category needs a positive count");
    require(!prior_.domain().is_scalar() && prior_.domain().categories() == static_cast<int>(counts.size()),
            ErrorCode::count_mismatch, "prior must live on the simplex with matching category count");
    if (const auto alpha = prior_.dirichlet_alpha()) {
      for (std::size_t i = 0; i < counts.size(); ++i) beta_.push_back((*alpha)[i] + static_cast<double>(counts[i]));
      exact_ = true;
    } else {
      for (auto c : counts) beta_.push_back(static_cast<double>(c) + 1.0);
      require(prior_.sup_density().has_value(), ErrorCode::invalid_argument, "simplex prior must be bounded");
      cap_ = *prior_.sup_density();
    }
  }

  bool exact() const { return exact_; }
  /// Dirichlet parameters of the exact posterior or of the envelope.
  const std::vector<double>& beta() const { return beta_; }

  /// Writes one draw into out and returns the number of envelope draws used.
  template <typename Rng>
  std::size_t draw(Rng& rng, std::span<double> out) const {
    detail::dirichlet_draw(rng, beta_, out);
    if (exact_) return 1;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t tries = 1;; ++tries) {
      if (u(rng) * cap_ <= prior_.density(std::span<const double>(out.data(), out.size() - 1))) return tries;
      require(tries < kMaxEnvelopeTries, ErrorCode::envelope_failure,
              "rejection sampler accepted nothing in 1e5 envelope draws (acceptance below 1e-4)");
      detail::dirichlet_draw(rng, beta_, out);
    }
  }

  static constexpr std::size_t kMaxEnvelopeTries = 100'000;

 private:
  PriorSpec prior_;
  std::vector<double> beta_;
  double cap_ = 0.0;
  bool exact_ = false;
};

struct MultinomialBuildOptions {
  std::size_t samples = kDefaultSamples;
  std::optional<std::uint64_t> seed;
};

class MultinomialPosterior {
 public:
  static MultinomialPosterior build(const Multinomial& data, const PriorSpec& prior,
                                    const MultinomialBuildOptions& opts = {}) {
    return MultinomialPosterior(data, prior, opts);
  }

  int categories() const { return t_; }
  int dimension() const { return t_ - 1; }
  std::int64_t n() const { return n_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const PriorSpec& prior() const { return prior_; }
  /// Relative frequencies a_1..a_t.
  const std::vector<double>& frequencies() const { return a_; }
  double log_norm_const() const { return log_norm_; }
  /// Dirichlet parameters of the posterior when the prior is Dirichlet.
  const std::optional<std::vector<double>>& dirichlet() const { return beta_; }
  /// Standard error of the Monte Carlo normalizer (0 for closed forms).
  double log_norm_std_error() const { return log_norm_se_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  std::size_t samples() const { return samples_; }

  InfoMatrix info() const { return info_matrix_multinomial(a_); }
  GaussianApprox limit() const { return GaussianApprox::from_h(info().h); }

  /// Log density at the free coordinates; -inf off the open simplex.
  double log_density(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == t_ - 1, ErrorCode::out_of_domain, "point has the wrong dimension");
    double last = 1.0;
    for (double v : x) {
      if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
      last -= v;
    }
    if (!(last > 0.0)) return -std::numeric_limits<double>::infinity();
    double lp = 0.0;
    if (beta_) {
      for (std::size_t i = 0; i + 1 < counts_.size(); ++i) lp += ((*beta_)[i] - 1.0) * std::log(x[i]);
      lp += (beta_->back() - 1.0) * std::log(last);
      return lp - log_norm_full_;
    }
    for (std::size_t i = 0; i + 1 < counts_.size(); ++i) lp += static_cast<double>(counts_[i]) * std::log(x[i]);
    lp += static_cast<double>(counts_.back()) * std::log(last);
    return lp + prior_.log_density(x) - log_norm_;
  }

  double density(std::span<const double> x) const { return std::exp(log_density(x)); }

  /// One posterior draw (all t coordinates).
  template <typename Rng>
  void draw(Rng& rng, std::span<double> out) const {
    sampler_.draw(rng, out);
  }

  /// Monte Carlo check of the total mass by importance sampling from the envelope.
  MonteCarloEstimate mass_check(std::size_t samples, std::uint64_t seed) const {
    std::vector<double> sums(kBatches, 0.0);
    std::vector<std::size_t> counts(kBatches, 0);
    const double log_env = detail::log_multivariate_beta(envelope_);
    parallel_for(kBatches, [&](std::size_t b) {
      CounterRng rng(seed, b);
      std::vector<double> x(static_cast<std::size_t>(t_));
      const std::size_t m = detail::batch_size(samples, b);
      for (std::size_t k = 0; k < m; ++k) {
        detail::dirichlet_draw(rng, envelope_, x);
        const std::span<const double> free(x.data(), x.size() - 1);
        double log_q = -log_env;
        for (int i = 0; i < t_; ++i) log_q += static_cast<double>(counts_[static_cast<std::size_t>(i)]) * std::log(x[static_cast<std::size_t>(i)]);
        sums[b] += std::exp(log_density(free) - log_q);
      }
      counts[b] = m;
    });
    return detail::batch_summary(sums, counts);
  }

 private:
  MultinomialPosterior(const Multinomial& data, const PriorSpec& prior, const MultinomialBuildOptions& opts)
      : t_(data.categories()),
        n_(data.n()),
        counts_(data.counts()),
        prior_(prior),
        sampler_(capped(counts_), prior) {
    a_ = data.frequencies();
    for (auto c : counts_) envelope_.push_back(static_cast<double>(c) + 1.0);

    if (const auto alpha = prior_.dirichlet_alpha()) {
      std::vector<double> beta(counts_.size());
      for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = (*alpha)[i] + static_cast<double>(counts_[i]);
      log_norm_full_ = detail::log_multivariate_beta(beta);
      log_norm_ = log_norm_full_ - detail::log_multivariate_beta(*alpha);
      beta_ = std::move(beta);
      return;
    }

    require(opts.seed.has_value(), ErrorCode::invalid_argument, "Monte Carlo normalization needs a seed");
    require(opts.samples >= kBatches, ErrorCode::invalid_argument, "need at least one draw per batch");
    seed_ = opts.seed;
    samples_ = opts.samples;
    std::vector<double> sums(kBatches, 0.0);
    std::vector<std::size_t> counts(kBatches, 0);
    parallel_for(kBatches, [&](std::size_t b) {
      CounterRng rng(*seed_, b);
      std::vector<double> x(static_cast<std::size_t>(t_));
      const std::size_t m = detail::batch_size(samples_, b);
      for (std::size_t k = 0; k < m; ++k) {
        detail::dirichlet_draw(rng, envelope_, x);
        sums[b] += prior_.density(std::span<const double>(x.data(), x.size() - 1));
      }
      counts[b] = m;
    });
    const auto mean = detail::batch_summary(sums, counts);
    require(mean.estimate > 0.0, ErrorCode::zero_mass, "prior puts no mass where the likelihood lives");
    log_norm_ = detail::log_multivariate_beta(envelope_) + std::log(mean.estimate);
    log_norm_se_ = mean.std_error / mean.estimate;
  }

  static std::span<const std::int64_t> capped(const std::vector<std::int64_t>& counts) {
    require(counts.size() <= kMaxCategories, ErrorCode::dimension_cap, "at most 4 categories are supported");
    return counts;
  }

  int t_;
  std::int64_t n_;
  std::vector<std::int64_t> counts_;
  PriorSpec prior_;
  SimplexPosteriorSampler sampler_;
  std::vector<double> a_;
  std::vector<double> envelope_;
  std::optional<std::vector<double>> beta_;
  double log_norm_ = 0.0;       // log int likelihood * prior
  double log_norm_full_ = 0.0;  // log B(beta), Dirichlet posteriors only
  double log_norm_se_ = 0.0;
  std::optional<std::uint64_t> seed_;
  std::size_t samples_ = 0;
};

inline MultinomialPosterior multinomial_posterior_build(const Multinomial& data, const PriorSpec& prior,
                                                        const MultinomialBuildOptions& opts = {}) {
  return MultinomialPosterior::build(data, prior, opts);
}

// ---------------------------------------------------------------------------

struct RescaledMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  /// Monte Carlo standard errors of the mean (zero for closed forms).
  Eigen::VectorXd mean_std_error;
  bool closed_form = false;
};

/// Mean and covariance of z = sqrt(n)(x - a) over the free coordinates.
inline RescaledMoments rescaled_moments(const MultinomialPosterior& mp, std::size_t samples = kDefaultSamples,
                                        std::optional<std::uint64_t> seed = std::nullopt) {
  const Eigen::Index r = mp.dimension();
  const double rn = std::sqrt(static_cast<double>(mp.n()));
  RescaledMoments out;
  out.mean = Eigen::VectorXd::Zero(r);
  out.covariance = Eigen::MatrixXd::Zero(r, r);
  out.mean_std_error = Eigen::VectorXd::Zero(r);
  if (const auto& beta = mp.dirichlet()) {
    const double b0 = std::accumulate(beta->begin(), beta->end(), 0.0);
    for (Eigen::Index i = 0; i < r; ++i) {
      const double bi = (*beta)[static_cast<std::size_t>(i)];
      out.mean(i) = rn * (bi / b0 - mp.frequencies()[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < r; ++j) {
        const double bj = (*beta)[static_cast<std::size_t>(j)];
        const double cov = ((i == j ? bi * b0 : 0.0) - bi * bj) / (b0 * b0 * (b0 + 1.0));
        out.covariance(i, j) = static_cast<double>(mp.n()) * cov;
      }
    }
    out.closed_form = true;
    return out;
  }

  require(seed.has_value(), ErrorCode::invalid_argument, "Monte Carlo moments need a seed");
  std::vector<Eigen::VectorXd> sums(kBatches, Eigen::VectorXd::Zero(r));
  std::vector<Eigen::MatrixXd> cross(kBatches, Eigen::MatrixXd::Zero(r, r));
  std::vector<std::size_t> counts(kBatches, 0);
  parallel_for(kBatches, [&](std::size_t b) {
    CounterRng rng(*seed, b);
    std::vector<double> x(static_cast<std::size_t>(mp.categories()));
    Eigen::VectorXd z(r);
    const std::size_t m = detail::batch_size(samples, b);
    for (std::size_t k = 0; k < m; ++k) {
      mp.draw(rng, x);
      for (Eigen::Index i = 0; i < r; ++i) z(i) = rn * (x[static_cast<std::size_t>(i)] - mp.frequencies()[static_cast<std::size_t>(i)]);
      sums[b] += z;
      cross[b] += z * z.transpose();
    }
    counts[b] = m;
  });
  std::size_t total = 0;
  for (std::size_t b = 0; b < kBatches; ++b) {
    out.mean += sums[b];
    out.covariance += cross[b];
    total += counts[b];
  }
  out.mean /= static_cast<double>(total);
  out.covariance = out.covariance / static_cast<double>(total) - out.mean * out.mean.transpose();
  for (Eigen::Index i = 0; i < r; ++i) {
    std::vector<double> s(kBatches);
    for (std::size_t b = 0; b < kBatches; ++b) s[b] = sums[b](i);
    out.mean_std_error(i) = detail::batch_summary(s, counts).std_error;
  }
  return out;
}

/// Monte Carlo total variation 1/2 E_q |p/q - 1| between the rescaled
/// posterior p and a Gaussian target q, drawing from q in kBatches streams.
inline MonteCarloEstimate tv_distance_md(const MultinomialPosterior& mp, const GaussianApprox& target,
                                         std::size_t samples, std::uint64_t seed) {
  const Eigen::Index r = mp.dimension();
  require(target.dim() == r, ErrorCode::invalid_argument, "target dimension does not match the posterior");
  require(leading_minors_positive(target.precision()), ErrorCode::degenerate, "target precision is degenerate");
  require(samples >= kBatches, ErrorCode::invalid_argument, "need at least one draw per batch");
  const double rn = std::sqrt(static_cast<double>(mp.n()));
  const double log_jac = -0.5 * static_cast<double>(r) * std::log(static_cast<double>(mp.n()));
  std::vector<double> sums(kBatches, 0.0);
  std::vector<std::size_t> counts(kBatches, 0);
  parallel_for(kBatches, [&](std::size_t b) {
    CounterRng rng(seed, b);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd e(r);
    std::vector<double> x(static_cast<std::size_t>(r));
    const std::size_t m = detail::batch_size(samples, b);
    for (std::size_t k = 0; k < m; ++k) {
      for (Eigen::Index i = 0; i < r; ++i) e(i) = normal(rng);
      const Eigen::VectorXd z = target.transform(e);
      for (Eigen::Index i = 0; i < r; ++i) {
        x[static_cast<std::size_t>(i)] = mp.frequencies()[static_cast<std::size_t>(i)] + z(i) / rn;
      }
      const double lp = mp.log_density(x) + log_jac;
      const double lq = target.log_density(z);
      sums[b] += 0.5 * std::fabs(std::exp(lp - lq) - 1.0);
    }
    counts[b] = m;
  });
  return detail::batch_summary(sums, counts);
}

}  // namespace bvmlab
