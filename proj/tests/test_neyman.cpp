#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "bvmlab/neyman.hpp"

using Catch::Approx;
using namespace bvmlab;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::parse;
}

const std::vector<double> kHalf{0.5, 0.5};
const std::vector<double> kThird{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

}  // namespace

TEST_CASE("likelihood ratio with empty cells", "[neyman]") {
  const auto s10 = TestSetup::from_lambda0(10, kHalf, 0.1);
  REQUIRE(likelihood_ratio(s10, std::array<std::int64_t, 2>{5, 5}) == Approx(1.0).epsilon(1e-15));
  const auto s4 = TestSetup::from_lambda0(4, kHalf, 0.1);
  REQUIRE(likelihood_ratio(s4, std::array<std::int64_t, 2>{1, 3}) == Approx(16.0 / 27.0).epsilon(1e-14));
  REQUIRE(likelihood_ratio(s4, std::array<std::int64_t, 2>{0, 4}) == Approx(0.0625).epsilon(1e-14));
  REQUIRE(code_of([&] { likelihood_ratio(s4, std::array<std::int64_t, 2>{1, 2}); }) == ErrorCode::count_mismatch);
  REQUIRE(code_of([&] { likelihood_ratio(s4, std::array<std::int64_t, 3>{1, 2, 1}); }) == ErrorCode::count_mismatch);
}

TEST_CASE("setup thresholds agree", "[neyman]") {
  const auto s = TestSetup::from_lambda0(4, kHalf, 0.1);
  REQUIRE(s.chi0() * s.chi0() == Approx(2.0 * std::log(10.0)).epsilon(1e-14));
  REQUIRE(TestSetup::from_chi0(4, kHalf, 2.0).lambda0() == Approx(std::exp(-2.0)));
  REQUIRE_NOTHROW(TestSetup::from_both(4, kHalf, std::exp(-2.0), 2.0));
  REQUIRE_THROWS_AS(TestSetup::from_both(4, kHalf, 0.2, 2.0), Error);
  REQUIRE_THROWS_AS(TestSetup::from_lambda0(4, {0.4, 0.5}, 0.1), Error);
  REQUIRE_THROWS_AS(TestSetup::from_lambda0(4, kHalf, 0.0), Error);
}

TEST_CASE("exact type-I probability by enumeration", "[neyman]") {
  REQUIRE(exact_type1(TestSetup::from_lambda0(4, kHalf, 0.1)) == Approx(0.125).epsilon(1e-14));
  REQUIRE(exact_type1(TestSetup::from_lambda0(4, kHalf, 1.0)) == Approx(1.0).epsilon(1e-14));
  REQUIRE(exact_type1(TestSetup::from_lambda0(4, kHalf, 1e-10)) == 0.0);
  // tie at the observed lambda of (2,8) is included
  REQUIRE(exact_type1(TestSetup::from_lambda0(10, kHalf, std::pow(0.5, 10) / (std::pow(0.2, 2) * std::pow(0.8, 8)))) ==
          Approx(0.109375).epsilon(1e-12));
  REQUIRE(exact_type1(TestSetup::from_lambda0(1000, kHalf, 0.5)) == Approx(0.241969).epsilon(1e-5));
  REQUIRE(exact_type1(TestSetup::from_lambda0(1000, kThird, 0.1)) == Approx(0.099449).epsilon(1e-4));

  const auto big = TestSetup::from_lambda0(1000, {0.25, 0.25, 0.25, 0.25}, 0.1);
  REQUIRE(code_of([&] { exact_type1(big); }) == ErrorCode::feasibility_guard);
}

TEST_CASE("exact type-I is monotone in the threshold", "[neyman][property]") {
  double prev = 2.0;
  for (double lam0 : {1.0, 0.8, 0.5, 0.3, 0.1, 0.03, 0.01, 1e-3, 1e-5}) {
    const double p = exact_type1(TestSetup::from_lambda0(60, {0.2, 0.3, 0.5}, lam0));
    REQUIRE(p <= prev);
    prev = p;
  }
}

TEST_CASE("chi-square statistics", "[neyman]") {
  const auto s = TestSetup::from_lambda0(100, kHalf, 0.1);
  const std::array<std::int64_t, 2> c{30, 70};
  REQUIRE(chi2_stat(s, c) == Approx(16.0).epsilon(1e-14));
  REQUIRE(chi2_tilde(s, c) == Approx(400.0 / 30.0 + 400.0 / 70.0).epsilon(1e-14));
  const std::array<std::int64_t, 2> null{50, 50};
  REQUIRE(chi2_stat(s, null) == 0.0);
  REQUIRE(chi2_tilde(s, null) == 0.0);
  REQUIRE(code_of([&] { chi2_tilde(s, std::array<std::int64_t, 2>{0, 100}); }) == ErrorCode::zero_count);
}

TEST_CASE("Pearson tail", "[neyman]") {
  REQUIRE(pearson_tail(3, 2.0) == Approx(std::exp(-2.0)).epsilon(1e-12));
  REQUIRE(pearson_tail(2, 1.959964) == Approx(0.0499999981928848).epsilon(1e-10));
  REQUIRE(pearson_tail(4, 0.0) == 1.0);
  for (int i = 0; i <= 80; ++i) {
    const double chi0 = 0.1 * i;
    REQUIRE(std::fabs(pearson_tail(2, chi0) - 2.0 * normal_sf(chi0)) <= 1e-10);
  }
  REQUIRE(chi2_approx_type1(TestSetup::from_lambda0(4, kHalf, 0.1)) == Approx(0.031875689306802936).epsilon(1e-10));
  REQUIRE(chi2_approx_type1(TestSetup::from_lambda0(4, kHalf, 1.0)) == 1.0);
  REQUIRE(chi2_approx_type1(TestSetup::from_lambda0(9, kThird, std::exp(-2.0))) == Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("minus two log lambda tracks chi-square near the null", "[neyman][property]") {
  std::mt19937_64 gen(20);
  const std::vector<double> p{0.2, 0.3, 0.5};
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t n = 500 + static_cast<std::int64_t>(gen() % 5000);
    const auto s = TestSetup::from_lambda0(n, p, 0.1);
    std::array<std::int64_t, 3> c{};
    std::int64_t used = 0;
    for (int i = 0; i < 2; ++i) {
      const double e = p[static_cast<std::size_t>(i)] * static_cast<double>(n);
      std::uniform_real_distribution<double> dev(-2.0 * std::sqrt(e), 2.0 * std::sqrt(e));
      c[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::llround(e + dev(gen)));
      used += c[static_cast<std::size_t>(i)];
    }
    c[2] = n - used;
    const double e2 = p[2] * static_cast<double>(n);
    if (std::fabs(static_cast<double>(c[2]) - e2) > 2.0 * std::sqrt(e2)) continue;
    const double chi2 = chi2_stat(s, c);
    REQUIRE(std::fabs(-2.0 * log_likelihood_ratio(s, c) - chi2) / std::max(1.0, chi2) <= 0.05);
    REQUIRE(likelihood_ratio(s, c) <= 1.0);
  }
}

TEST_CASE("posterior test probability", "[neyman]") {
  const std::array<std::int64_t, 3> c{300, 300, 400};
  const std::vector<double> q{0.3, 0.3, 0.4};
  const auto uniform = PriorSpec::uniform(ParamDomain::simplex(3));
  const auto at2 = posterior_test_prob(TestSetup::from_chi0(1000, q, 2.0), c, uniform, {100'000, 17});
  REQUIRE(std::fabs(at2.estimate - pearson_tail(3, 2.0)) <= 3.0 * at2.std_error);
  REQUIRE(at2.estimate == Approx(0.1341).margin(0.005));
  REQUIRE(posterior_test_prob(TestSetup::from_chi0(1000, q, 0.0), c, uniform, {1000, 1}).estimate == 1.0);
  REQUIRE(posterior_test_prob(TestSetup::from_chi0(1000, q, 50.0), c, uniform, {1000, 1}).estimate == 0.0);

  const auto again = posterior_test_prob(TestSetup::from_chi0(1000, q, 2.0), c, uniform, {100'000, 17});
  REQUIRE(again.estimate == at2.estimate);

  // product-kernel prior goes through the rejection sampler
  const PriorSpec product(prior_kind::Beta{2.0, 2.0}, ParamDomain::simplex(3));
  const auto rej = posterior_test_prob(TestSetup::from_chi0(1000, q, 2.0), c, product, {50'000, 5});
  REQUIRE(rej.estimate == Approx(at2.estimate).margin(0.015));

  REQUIRE(code_of([&] {
            posterior_test_prob(TestSetup::from_chi0(700, q, 2.0), std::array<std::int64_t, 3>{0, 300, 400}, uniform,
                                {1000, 1});
          }) == ErrorCode::zero_count);
}

TEST_CASE("frequentist and posterior probabilities agree at n = 1000", "[neyman][property]") {
  const std::array<std::int64_t, 2> c2{500, 500};
  const std::array<std::int64_t, 3> c3{333, 333, 334};
  for (double lam0 : {0.5, 0.1, 0.01}) {
    const auto r2 = duality_at(TestSetup::from_lambda0(1000, kHalf, lam0), c2, PriorSpec::uniform(ParamDomain::simplex(2)),
                               {200'000, 3});
    REQUIRE(r2.exact_p.has_value());
    REQUIRE(r2.gap <= 0.02);
    const auto r3 = duality_at(TestSetup::from_lambda0(1000, kThird, lam0), c3,
                               PriorSpec::uniform(ParamDomain::simplex(3)), {200'000, 3});
    REQUIRE(r3.gap <= 0.02);
  }
}

TEST_CASE("duality at the observed likelihood ratio", "[neyman]") {
  const auto eq = duality_report(1000, kHalf, std::array<std::int64_t, 2>{500, 500},
                                 PriorSpec::uniform(ParamDomain::simplex(2)), {10'000, 1});
  REQUIRE(eq.lambda0 == 1.0);
  REQUIRE(*eq.exact_p == Approx(1.0));
  REQUIRE(eq.posterior_p == 1.0);

  const auto r = duality_report(1000, {0.32, 0.32, 0.36}, std::array<std::int64_t, 3>{300, 300, 400},
                                PriorSpec::uniform(ParamDomain::simplex(3)), {200'000, 8});
  REQUIRE(r.log_lambda0 == Approx(-3.4211).margin(1e-4));
  REQUIRE(*r.exact_p == Approx(0.032929).epsilon(1e-4));
  REQUIRE(r.gap <= 0.02);

  const auto small = duality_report(10, kHalf, std::array<std::int64_t, 2>{2, 8},
                                    PriorSpec::uniform(ParamDomain::simplex(2)), {200'000, 8});
  REQUIRE(*small.exact_p == Approx(0.109375).epsilon(1e-12));
  REQUIRE(small.gap > 0.02);

  std::ostringstream out;
  write_duality_csv_header(out);
  write_duality_csv_row(out, small);
  REQUIRE(out.str().rfind("n,k,lambda0,exact_P,chi2_P,posterior_P,posterior_se,gap\n10,2,", 0) == 0);
}
