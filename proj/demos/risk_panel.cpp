// Bayes risk of the built-in estimators for k Bernoulli trials, quadratic and
// exponential gain, uniform prior.
#include <cstdio>

#include "bvmlab/lecam.hpp"

using namespace bvmlab;

int main() {
  const auto prior = PriorSpec::uniform();
  for (const auto& gain : {GainFunction::negative_quadratic(), GainFunction::exponential(100.0)}) {
    std::printf("%s\n", gain.describe().c_str());
    for (std::int64_t k : {5, 20, 100, 200}) {
      const auto rep = risk_report(k, builtin_panel(), gain, prior);
      std::printf("  k=%-4lld", static_cast<long long>(k));
      for (const auto& e : rep.entries) std::printf("  %s %.6f", e.estimator.c_str(), e.j);
      std::printf("   best: %s\n", rep.entries[rep.best].estimator.c_str());
    }
  }
}
