// Likelihood-ratio test of equal cell probabilities: exact type-I probability,
// Pearson's chi-square value and the posterior probability of chi~ >= chi0.
#include <cstdio>

#include "bvmlab/neyman.hpp"

using namespace bvmlab;

int main() {
  const std::vector<double> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto prior = PriorSpec::uniform(ParamDomain::simplex(3));
  std::printf("%6s %8s %10s %10s %10s %8s\n", "n", "lambda0", "exact", "chi2", "posterior", "gap");
  for (std::int64_t n : {30, 150, 600}) {
    const std::vector<std::int64_t> counts{n / 3, n / 3, n - 2 * (n / 3)};
    for (double lam0 : {0.5, 0.1, 0.01}) {
      const auto r = duality_at(TestSetup::from_lambda0(n, p, lam0), counts, prior, {200'000, 42});
      std::printf("%6lld %8.2f %10.5f %10.5f %10.5f %8.5f\n", static_cast<long long>(n), lam0, *r.exact_p, r.chi2_p,
                  r.posterior_p, r.gap);
    }
  }
}
