#pragma once

#include <cstdint>
#include <vector>

#include "htreg/common.hpp"

namespace htreg {

/// Sentinel for hill_estimator's k parameter: use k = floor(n / 2).
inline constexpr int kHillAutoK = 0;

struct TailEstimate {
  double alpha_hat = 0.0;  ///< estimated density tail exponent, > 1
  int k = 0;               ///< order-statistic cut, 1 <= k <= n - 1
  int n = 0;               ///< sample size
};

/// Hill estimate of the power-law tail index of a positive sample:
/// alpha_hat = 1 + k / sum_{i=1..k} ln(x_{n-i+1} / x_{n-k}) on the
/// ascending order statistics. Input need not be sorted.
TailEstimate hill_estimator(std::vector<double> samples, int k = kHillAutoK);

/// i.i.d. draws with density tail exponent alpha: x = U^{-1/(alpha-1)},
/// U uniform on (0,1], x_min = 1.
std::vector<double> sample_pareto(double alpha, int n, std::uint64_t seed);

/// Standard Frechet(alpha) draws: x = (-ln U)^{-1/alpha}.
std::vector<double> sample_frechet(double alpha, int n, std::uint64_t seed);

}  // namespace htreg
