#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "bvmlab/estimate.hpp"
#include "bvmlab/posterior.hpp"

using Catch::Approx;
using namespace bvmlab;

namespace {

double beta_pdf(double x, double a, double b) {
  return std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - std::lgamma(a) - std::lgamma(b) +
                  std::lgamma(a + b));
}

}  // namespace

TEST_CASE("posterior build on small cases", "[posterior]") {
  const auto p = posterior_build(Binomial(2, 1), PriorSpec::uniform());
  REQUIRE(std::exp(p.log_norm_const()) == Approx(1.0 / 6).epsilon(1e-12));
  REQUIRE(p.density(0.5) == Approx(1.5).epsilon(1e-12));

  const auto none = posterior_build(Binomial(0, 0), PriorSpec::beta(2, 2));
  REQUIRE(none.density(0.5) == Approx(1.5).epsilon(1e-12));
  REQUIRE(none.density(0.1) == Approx(6 * 0.1 * 0.9).epsilon(1e-12));
}

TEST_CASE("wide-prior Gaussian location posterior", "[posterior]") {
  const auto p = posterior_build(Location({1.0, 3.0}, ErrorLaw::gaussian(1.0)),
                                 PriorSpec::truncated_gaussian(2.0, 100.0, ParamDomain::real_line()));
  // conjugate normal-normal: precision 2 + 1e-4, mean 2
  REQUIRE(p.density(2.0) == Approx(0.5642036881110402).epsilon(1e-10));
  REQUIRE(std::fabs(p.median() - 2.0) <= 1e-3);
  REQUIRE(p.normalization_error() <= 1e-8);
}

TEST_CASE("interval probabilities", "[posterior]") {
  const auto flat = posterior_build(Binomial(0, 0), PriorSpec::uniform());
  REQUIRE(flat.interval_probability(0.2, 0.7) == Approx(0.5).epsilon(1e-12));
  REQUIRE(posterior_build(Binomial(2, 1), PriorSpec::uniform()).interval_probability(0.0, 0.5) ==
          Approx(0.5).epsilon(1e-12));
  const auto p = posterior_build(Binomial(100, 50), PriorSpec::uniform());
  REQUIRE(p.interval_probability(0.45, 0.55) == Approx(0.6875107992756119).epsilon(1e-9));
  try {
    p.interval_probability(0.6, 0.4);
    FAIL("expected reversed-interval error");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::reversed_interval);
  }
  REQUIRE_THROWS_AS(p.interval_probability(-0.1, 0.4), Error);
}

TEST_CASE("posterior quantiles", "[posterior]") {
  REQUIRE(posterior_build(Binomial(2, 1), PriorSpec::uniform()).median() == Approx(0.5).margin(1e-10));
  const auto de = posterior_build(Location({0.0, 0.0, 10.0}, ErrorLaw::double_exponential(1.0)),
                                  PriorSpec::truncated_gaussian(0.0, 100.0, ParamDomain::real_line()));
  const double med = de.median();
  REQUIRE(med >= 0.0);
  REQUIRE(med <= 0.7);
  REQUIRE(med == Approx(0.40537159186112504).margin(1e-8));
}

TEST_CASE("rescaled posterior", "[posterior]") {
  const Binomial m(100, 50);
  const auto post = posterior_build(m, PriorSpec::uniform());
  const auto g = rescaled_density(post, mle_closed_form(m));
  REQUIRE(g.density(0.0) == Approx(0.40192564880525267).epsilon(1e-10));
  REQUIRE(std::fabs(g.density(0.0) - normal_pdf(0.0)) <= 0.03 * normal_pdf(0.0));

  const auto heat = g.with_convention(Convention::heat_kernel);
  REQUIRE(heat.density(0.0) == Approx(std::sqrt(2.0) * g.density(0.0)).epsilon(1e-14));

  for (const auto& r : {g, heat}) {
    const std::vector<double> pts{r.support_lo(), 0.0, r.support_hi()};
    const double total = integrate_or_throw([&](double x) { return r.density(x); }, pts);
    REQUIRE(std::fabs(total - 1.0) <= 1e-8);
  }
  REQUIRE(g.density(g.support_hi() + 1.0) == 0.0);
}

TEST_CASE("expansion remainder", "[posterior]") {
  const Binomial m(100, 50);
  const auto mle = mle_closed_form(m);
  REQUIRE(expansion_remainder(m, mle, 0.0) == 0.0);
  const double r1 = expansion_remainder(m, mle, 1.0);
  REQUIRE(r1 == Approx(-0.002516792675072956).epsilon(1e-9));
  REQUIRE(std::fabs(r1) <= 0.01);

  const Location loc({0.3, -1.2, 2.5, 0.7}, ErrorLaw::gaussian(1.5));
  const auto lm = fit_mle(loc);
  for (double x : {-3.0, -0.5, 1.0, 7.0}) REQUIRE(std::fabs(expansion_remainder(loc, lm, x)) <= 1e-12);

  REQUIRE_THROWS_AS(expansion_remainder(m, mle, 50.0), Error);
}

TEST_CASE("remainder halves when n quadruples off the symmetric point", "[posterior][property]") {
  const double oracle[] = {0.025116, 0.013503, 0.0070059};
  double prev = 0.0;
  int i = 0;
  for (std::int64_t n : {100, 400, 1600}) {
    const Binomial m(n, 3 * n / 10);
    const double r = expansion_remainder(m, mle_closed_form(m), 1.0);
    REQUIRE(r == Approx(oracle[i]).epsilon(1e-4));
    if (i > 0) {
      REQUIRE(r / prev >= 0.5 * 0.7);
      REQUIRE(r / prev <= 0.5 * 1.3);
    }
    prev = r;
    ++i;
  }
}

TEST_CASE("random model/prior pairs normalize", "[posterior][property]") {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> logn(0, 4000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::int64_t>(std::pow(10.0, logn(rng) / 1000.0)) - (rep % 7 == 0 ? 1 : 0);
    const auto s = static_cast<std::int64_t>(std::floor(u(rng) * (n + 1)));
    PriorSpec prior = PriorSpec::uniform();
    switch (rep % 5) {
      case 1: prior = PriorSpec::beta(0.5 + 4 * u(rng), 0.5 + 4 * u(rng)); break;
      case 2: prior = PriorSpec::truncated_gaussian(u(rng), 0.05 + u(rng)); break;
      case 3: prior = PriorSpec::piecewise_linear({{0, 0.1}, {u(rng), 1 + 3 * u(rng)}, {1, 0.2}}); break;
      case 4: {
        const double mu = 20 * u(rng) - 10;
        std::vector<double> xs;
        for (int k = 0; k < 1 + rep % 40; ++k) xs.push_back(mu + 3 * (u(rng) - 0.5));
        const auto law = rep % 2 ? ErrorLaw::gaussian(0.5 + u(rng)) : ErrorLaw::double_exponential(0.5 + u(rng));
        const auto p = posterior_build(Location(xs, law),
                                       PriorSpec::truncated_gaussian(0.0, 30.0, ParamDomain::real_line()));
        REQUIRE(p.normalization_error() <= 1e-8);
        continue;
      }
      default: break;
    }
    INFO("n=" << n << " s=" << s << " prior=" << prior.describe());
    const auto p = posterior_build(Binomial(std::max<std::int64_t>(n, 0), std::min(s, std::max<std::int64_t>(n, 0))),
                                   prior);
    REQUIRE(p.normalization_error() <= 1e-8);
  }
}

TEST_CASE("binomial posterior matches the Beta conjugate", "[posterior][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(std::pow(10.0, 4 * u(rng)));
    const std::int64_t s = static_cast<std::int64_t>(u(rng) * static_cast<double>(n + 1)) % (n + 1);
    const double a = 0.5 + 5 * u(rng);
    const double b = 0.5 + 5 * u(rng);
    const auto p = posterior_build(Binomial(n, s), PriorSpec::beta(a, b));
    const double A = static_cast<double>(s) + a;
    const double B = static_cast<double>(n - s) + b;
    const double mean = A / (A + B);
    const double sd = std::sqrt(A * B / ((A + B) * (A + B) * (A + B + 1)));
    for (int k = 0; k < 20; ++k) {
      const double t = std::clamp(mean + sd * (-3.0 + 6.0 * k / 19.0), 1e-6, 1 - 1e-6);
      INFO("n=" << n << " s=" << s << " a=" << a << " b=" << b << " t=" << t);
      REQUIRE(p.density(t) == Approx(beta_pdf(t, A, B)).epsilon(1e-6));
    }
  }
}

TEST_CASE("cdf is monotone and inverts the quantile", "[posterior][property]") {
  const auto p = posterior_build(Binomial(40, 13), PriorSpec::beta(2, 5));
  double prev = 0.0;
  for (double t = 0.0; t <= 1.0; t += 0.002) {
    const double c = p.cdf(t);
    REQUIRE(c >= prev - 1e-15);
    prev = c;
  }
  for (double q : {0.01, 0.2, 0.5, 0.77, 0.99}) REQUIRE(p.cdf(p.quantile(q)) == Approx(q).margin(1e-8));
}

TEST_CASE("asymptotic normality at n = 10^4", "[posterior]") {
  const Binomial m(10000, 5000);
  const auto g = rescaled_density(posterior_build(m, PriorSpec::uniform()), mle_closed_form(m));
  double worst = 0.0;
  for (double x = -3.0; x <= 3.0; x += 0.01) worst = std::max(worst, std::fabs(g.density(x) - normal_pdf(x)));
  REQUIRE(worst <= 0.01);
}

TEST_CASE("grid export", "[posterior]") {
  const auto p = posterior_build(Binomial(2, 1), PriorSpec::uniform());
  std::ostringstream out;
  const std::vector<double> grid{0.25, 0.5};
  p.write_grid_csv(out, grid);
  REQUIRE(out.str() == "theta,density,cdf\n0.25,1.125,0.15625\n0.5,1.5,0.5\n");
}
