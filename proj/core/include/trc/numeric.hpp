#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trc {

// Pairwise (cascade) summation; result does not depend on thread layout.
double pairwise_sum(std::span<const double> values);

// log(sum(exp(v))) with -inf entries allowed; returns -inf for all -inf.
double log_sum_exp(std::span<const double> values);

// Kahan-free sample mean and unbiased variance via pairwise sums.
struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};
MeanVar mean_variance(std::span<const double> values);

// x^a with the 0^a = 0 convention for a > 0.
double safe_pow(double x, double a);

// x log(x / y) with 0 log 0 = 0.
double xlogx_over_y(double x, double y);

// Integer power with overflow guard against a budget; returns 0 on overflow.
std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t budget);

} // namespace trc
