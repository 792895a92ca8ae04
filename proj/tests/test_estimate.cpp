#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "bvmlab/estimate.hpp"

using Catch::Approx;
using namespace bvmlab;

TEST_CASE("closed-form MLE", "[estimate]") {
  const auto r = mle_closed_form(Binomial(100, 50));
  REQUIRE(r.theta_n() == 0.5);
  REQUIRE(r.alpha_n_sq == 400.0);
  REQUIRE(r.alpha_n() == 20.0);
  REQUIRE(r.beta_n() == Approx(std::sqrt(2.0) / 20));
  REQUIRE(mle_closed_form(Binomial(4, 1)).alpha_n_sq == Approx(4 / (0.25 * 0.75)).epsilon(1e-15));

  const auto q = mle_closed_form(Multinomial({30, 30, 40}));
  REQUIRE(q.point.size() == 2);
  REQUIRE(q.point[0] == Approx(0.3));
  REQUIRE(q.point[1] == Approx(0.3));
}

TEST_CASE("boundary MLE is rejected", "[estimate]") {
  for (auto s : {0, 10}) {
    try {
      mle_closed_form(Binomial(10, s));
      FAIL("expected boundary error");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::boundary_mle);
    }
  }
  REQUIRE_THROWS_AS(mle_closed_form(Multinomial({3, 0, 2})), Error);
  REQUIRE_THROWS_AS(mle_newton(Binomial(10, 0), 0.5), Error);
}

TEST_CASE("Newton iteration", "[estimate]") {
  const auto b = mle_newton(Binomial(10, 3), 0.5);
  REQUIRE(b.converged);
  REQUIRE(std::fabs(b.theta_n() - 0.3) <= 1e-10);

  const Location g({1.0, 2.0, 3.0}, ErrorLaw::gaussian(1.0));
  const auto r = mle_newton(g, 0.0);
  REQUIRE(r.theta_n() == Approx(2.0).epsilon(1e-14));
  REQUIRE(r.alpha_n_sq == Approx(3.0));
}

TEST_CASE("double-exponential location falls back to golden section", "[estimate]") {
  const Location m({0.0, 0.0, 10.0}, ErrorLaw::double_exponential(1.0));
  const auto r = mle_newton(m, 1.0);
  REQUIRE(r.converged);
  REQUIRE(std::fabs(r.theta_n()) <= 1e-9);
  // symmetric second difference with h = 1e-4 at the kink: 4h / h^2
  REQUIRE(r.alpha_n_sq == Approx(4e4).epsilon(1e-6));
}

TEST_CASE("Newton agrees with the closed form from any start", "[estimate][property]") {
  for (auto [n, s] : {std::pair{10, 3}, {100, 1}, {1000, 999}, {57, 20}, {10000, 5000}}) {
    const Binomial m(n, s);
    const auto exact = mle_closed_form(m);
    for (double init = 0.011; init < 0.99; init += 0.0487) {
      const auto r = mle_newton(m, init);
      INFO("n=" << n << " s=" << s << " init=" << init);
      REQUIRE(std::fabs(r.theta_n() - exact.theta_n()) <= 1e-10);
      REQUIRE(std::fabs(score(m, r.theta_n())) <= 1e-10 * n);
    }
  }
}

TEST_CASE("analytic curvature matches a central second difference", "[estimate][property]") {
  for (auto [n, s] : {std::pair{10, 3}, {100, 50}, {1000, 123}, {4096, 2048}}) {
    const Binomial m(n, s);
    const auto r = mle_closed_form(m);
    const double t = r.theta_n();
    const double h = 1e-5;
    const double d2 = (log_likelihood(m, t + h) - 2 * log_likelihood(m, t) + log_likelihood(m, t - h)) / (h * h);
    REQUIRE(-d2 == Approx(r.alpha_n_sq).epsilon(1e-5));
  }
}

TEST_CASE("multinomial curvature matrix", "[estimate]") {
  const std::array<double, 3> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto h = info_matrix_multinomial(third).h;
  REQUIRE(h(0, 0) == Approx(3.0));
  REQUIRE(h(0, 1) == Approx(1.5));
  REQUIRE(h(1, 0) == Approx(1.5));
  REQUIRE(h(1, 1) == Approx(3.0));

  const std::array<double, 2> half{0.5, 0.5};
  REQUIRE(info_matrix_multinomial(half).h(0, 0) == Approx(2.0));

  const std::array<double, 3> a{0.2, 0.3, 0.5};
  const auto h2 = info_matrix_multinomial(a).h;
  REQUIRE(h2(0, 0) == Approx(3.5));
  REQUIRE(h2(0, 1) == Approx(1.0));
  REQUIRE(h2(1, 1) == Approx(8.0 / 3));

  const std::array<double, 3> zero{0.0, 0.5, 0.5};
  try {
    info_matrix_multinomial(zero);
    FAIL("expected degenerate-frequency error");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::degenerate);
  }
}

TEST_CASE("Fisher information per family", "[estimate]") {
  REQUIRE(fisher_gamma_bernoulli(0.5).gamma(0, 0) == 4.0);
  REQUIRE(fisher_gamma_location(ErrorLaw::gaussian(2.0)).gamma(0, 0) == 0.25);
  const std::array<double, 3> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto g = fisher_gamma_multinomial(third).gamma;
  REQUIRE(g(0, 0) == Approx(6.0));
  REQUIRE(g(0, 1) == Approx(3.0));
  REQUIRE(g(1, 1) == Approx(6.0));
  try {
    fisher_gamma_location(ErrorLaw::double_exponential(1.0));
    FAIL("expected unsupported-family error");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::unsupported_family);
  }
  const std::array<double, 1> half{0.5};
  REQUIRE(fisher_gamma(Binomial(0, 0), half).gamma(0, 0) == 4.0);
}

TEST_CASE("Fisher information is twice H for multinomial data", "[estimate][property]") {
  Catch::Generators::RandomFloatingGenerator<double> u(0.05, 1.0, 12345);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(1 + rep % 3 + 1);
    double sum = 0.0;
    for (auto& v : a) {
      v = u.get();
      u.next();
      sum += v;
    }
    for (auto& v : a) v /= sum;
    const auto info = info_matrix_multinomial(a);
    const auto fg = fisher_gamma_multinomial(a).gamma;
    REQUIRE(leading_minors_positive(info.h));
    REQUIRE((info.h - info.h.transpose()).norm() == 0.0);
    REQUIRE((fg - 2.0 * info.h).cwiseAbs().maxCoeff() <= 1e-12 * fg.cwiseAbs().maxCoeff());
  }
}
