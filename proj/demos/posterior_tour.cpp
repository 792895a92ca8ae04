// Binomial posterior under a beta(2,5) prior: how fast it forgets the prior
// and approaches the normal law around the MLE.
#include <cstdio>

#include "bvmlab/approx.hpp"
#include "bvmlab/distance.hpp"

using namespace bvmlab;

int main() {
  std::printf("%8s %12s %12s %14s\n", "n", "TV(limit)", "TV(priors)", "Laplace err");
  for (std::int64_t n : {50, 200, 1000, 5000, 20000}) {
    const Binomial m(n, 3 * n / 10);
    const auto fit = mle_closed_form(m);
    const auto flat = posterior_build(m, PriorSpec::uniform());
    const auto skew = posterior_build(m, PriorSpec::beta(2, 5));
    const auto g = rescaled_density(skew, fit);
    const double to_limit = limit_distance(g, Metric::tv).distance;
    const double between = posterior_distance(rescaled_density(flat, fit), g, Metric::tv).distance;

    // two-sigma window from the tail formula against the exact mass
    const double w = 2.0 / fit.alpha_n();
    const double exact = flat.interval_probability(fit.theta_n() - w, fit.theta_n() + w);
    std::printf("%8lld %12.3e %12.3e %14.3e\n", static_cast<long long>(n), to_limit, between,
                laplace_tail(m, w).value - exact);
  }
}
