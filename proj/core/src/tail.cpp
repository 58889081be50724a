#include "htreg/tail.hpp"

#include <algorithm>
#include <cmath>

#include "htreg/rng.hpp"

namespace htreg {

TailEstimate hill_estimator(std::vector<double> samples, int k) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) {
    throw NonPositiveSample("need at least 2 samples, got " +
                            std::to_string(n));
  }
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw NonPositiveSample("samples must be positive and finite");
    }
  }
  if (k == kHillAutoK) k = n / 2;
  if (k < 1 || k > n - 1) {
    throw Error("order-statistic cut k out of range [1, n-1]");
  }

  std::sort(samples.begin(), samples.end());
  const double x_cut = samples[n - k - 1];  // x_{n-k} in 1-indexed order
  double log_ratio_sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    log_ratio_sum += std::log(samples[n - i] / x_cut);
  }
  if (log_ratio_sum <= 1e-12) {
    throw DegenerateTail("top-k order statistics are all equal to the cut");
  }
  return TailEstimate{1.0 + k / log_ratio_sum, k, n};
}

std::vector<double> sample_pareto(double alpha, int n, std::uint64_t seed) {
  if (!(alpha > 1.0)) {
    throw InvalidAlpha("pareto sampler requires alpha > 1");
  }
  Rng rng(seed);
  std::vector<double> out(n);
  // Density exponent alpha means survival exponent alpha - 1.
  const double inv = -1.0 / (alpha - 1.0);
  for (double& x : out) x = std::pow(rng.uniform_open(), inv);
  return out;
}

std::vector<double> sample_frechet(double alpha, int n, std::uint64_t seed) {
  if (!(alpha > 0.0)) {
    throw InvalidAlpha("frechet sampler requires alpha > 0");
  }
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) {
    x = std::pow(-std::log(rng.uniform_interior()), -1.0 / alpha);
  }
  return out;
}

}  // namespace htreg
