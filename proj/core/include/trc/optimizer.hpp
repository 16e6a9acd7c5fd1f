#pragma once

#include <functional>
#include <span>
#include <vector>

namespace trc {

struct SearchReport {
  double argmax = 0.0;
  double value = 0.0;
  double bracket_width = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MultiSearchReport {
  std::vector<double> argmax;
  double value = 0.0;
  double gradient_norm = 0.0;  // sup-norm of the projected gradient at argmax
  int iterations = 0;
  bool converged = false;
  bool on_boundary = false;
};

using Objective1d = std::function<double(double)>;
using ObjectiveNd = std::function<double(std::span<const double>)>;
using GradientNd = std::function<void(std::span<const double>, std::span<double>)>;

inline constexpr double default_tolerance = 1e-9;

// Golden-section search on [lo, hi]. Exact for concave f; a local maximizer
// otherwise. Endpoints are compared at the end and ties go to the smallest
// argument. NaN from f raises NumericError.
SearchReport maximize_concave_1d(const Objective1d& f, double lo, double hi,
                                 double tol = default_tolerance, int max_iter = 500);

// Maximizes a concave f on [lo, cap]: doubles the step from lo until f stops
// increasing, then refines by golden section. If f still increases at cap the
// report has argmax = cap and converged = false.
SearchReport maximize_unbounded(const Objective1d& f, double lo, double tol = default_tolerance,
                                double cap = 1e6);

// Projected BFGS ascent on the box |x_i| <= trust_radius with Armijo
// backtracking. The gradient is checked against central differences at x0.
MultiSearchReport ascend_multivariate(const ObjectiveNd& f, const GradientNd& grad,
                                      std::vector<double> x0, double trust_radius,
                                      double tol = default_tolerance, int max_iter = 10000);

} // namespace trc
