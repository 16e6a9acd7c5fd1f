#pragma once

#include "trc/channel.hpp"
#include "trc/ensemble.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trc {

// Confidence sequence gamma_n.
class GammaSchedule {
public:
  // gamma_n = n^alpha; alpha > 1 keeps sum 1/gamma_n finite.
  static GammaSchedule power(double alpha = 2.0);
  // gamma_n = table[n-1]; must be positive and nondecreasing.
  static GammaSchedule table(std::vector<double> values);

  double operator()(std::size_t n) const;
  double log_gamma(std::size_t n) const;
  bool is_power() const noexcept { return table_.empty(); }
  double alpha() const noexcept { return alpha_; }
  // sum_{k<=n} 1/gamma_k.
  double partial_reciprocal_sum(std::size_t n) const;
  // Upper bound on the infinite reciprocal sum for the power form.
  double reciprocal_sum_bound() const;
  std::string describe() const;

private:
  double alpha_ = 2.0;
  std::vector<double> table_;
};

// Either the n -> infinity limit or a finite blocklength with a schedule.
class Horizon {
public:
  static Horizon asymptotic() { return Horizon{}; }
  static Horizon finite(std::size_t n, GammaSchedule schedule = GammaSchedule::power());

  bool is_asymptotic() const noexcept { return !n_.has_value(); }
  std::size_t n() const { return n_.value(); }
  const GammaSchedule& schedule() const noexcept { return schedule_; }
  // iota_n = log(gamma_n)/n, zero in asymptotic mode.
  double iota() const;
  std::string describe() const;

private:
  std::optional<std::size_t> n_;
  GammaSchedule schedule_ = GammaSchedule::power();
};

enum class Branch { expurgated_2r, random_coding };
const char* to_string(Branch b);

struct ExponentDiagnostics {
  int iterations = 0;
  double tolerance = 0.0;
  bool unbounded_lambda = false;  // lambda search reached its cap
  double penalty = 0.0;           // delta_n or iota_n subtracted from the value
};

struct ExponentResult {
  double value = 0.0;
  double optimizer = 0.0;  // lambda-hat or rho-hat
  Branch branch = Branch::random_coding;
  ExponentDiagnostics diagnostics;
};

struct TrcBound {
  double value = 0.0;
  Branch branch = Branch::random_coding;
  ExponentResult expurgated;
  ExponentResult random_coding;
};

struct CriticalRates {
  double r_cr = 0.0;
  double r_star = 0.0;
};

struct NuMoments {
  double nu0 = 0.0;
  double nu1 = 0.0;
  bool finite = true;
};

inline constexpr double lambda_cap = 1e6;

// Single-letter Gallager functions.
double gallager_e0(const Dmc& dmc, const InputDistribution& q, double rho);
double gallager_e0_derivative(const Dmc& dmc, const InputDistribution& q, double rho);
ExponentResult random_coding_exponent(const Dmc& dmc, const InputDistribution& q, double rate);
CriticalRates critical_rates(const Dmc& dmc, const InputDistribution& q);

double ex_iid(const Dmc& dmc, const InputDistribution& q, double lambda);
// Same function from a precomputed |X| x |X| Bhattacharyya matrix. The formula
// is smooth for any lambda > 0, so this overload accepts lambda in (0, 1) too.
double ex_iid(std::span<const double> z, const InputDistribution& q, double lambda);
double ex_lambda_derivative(const Dmc& dmc, const InputDistribution& q, double lambda);
double ex_lambda_derivative(std::span<const double> z, const InputDistribution& q, double lambda);

// Constant-composition Ex: sup over a(.) with a(0) = 0.
double ex_cc_objective(const Dmc& dmc, const InputDistribution& q, double lambda, std::span<const double> a);
struct TiltResult {
  double value = 0.0;
  std::vector<double> tilt;
  bool on_boundary = false;
};
TiltResult ex_cc_detailed(const Dmc& dmc, const InputDistribution& q, double lambda);
double ex_cc(const Dmc& dmc, const InputDistribution& q, double lambda);

// Cost-constrained Ex: sup over (r, r'), tilt layout [r_1..r_L, r'_1..r'_L].
double ex_cost_objective(const Dmc& dmc, const InputDistribution& q, double lambda,
                         std::span<const CostFunction> costs, std::span<const double> r);
TiltResult ex_cost_detailed(const Dmc& dmc, const InputDistribution& q, double lambda,
                            std::span<const CostFunction> costs);
double ex_cost(const Dmc& dmc, const InputDistribution& q, double lambda, std::span<const CostFunction> costs);

// Cost-constrained E0: sup over r of the tilted Gallager function.
double e0_cost_objective(const Dmc& dmc, const InputDistribution& q, double rho,
                         std::span<const CostFunction> costs, std::span<const double> r);
TiltResult e0_cost_detailed(const Dmc& dmc, const InputDistribution& q, double rho,
                            std::span<const CostFunction> costs);
double e0_cost(const Dmc& dmc, const InputDistribution& q, double rho, std::span<const CostFunction> costs);

// Decoding metric q(x, y), row-major |X| x |Y|.
double mismatched_e0(const Dmc& dmc, std::span<const double> metric, const InputDistribution& q,
                     double rho, double tau);
double mismatched_ex(const Dmc& dmc, std::span<const double> metric, const InputDistribution& q,
                     double lambda, double tau);

double r_infinity(const InputDistribution& q, std::span<const double> z);
NuMoments nu_moments(const Dmc& dmc, const InputDistribution& q);
// nu_1 uses the tilt that is optimal for the ensemble's Ex as lambda grows.
NuMoments nu_moments(const Dmc& dmc, const EnsembleSpec& spec);
double lambda_hat_growth(double nu1, double m, double gamma, std::size_t n);

// Ensemble-dispatched building blocks.
double ex_for(const Dmc& dmc, const EnsembleSpec& spec, double lambda);
double e0_for(const Dmc& dmc, const EnsembleSpec& spec, double rho);
CriticalRates critical_rates(const Dmc& dmc, const EnsembleSpec& spec);

ExponentResult expurgated_branch(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon);
ExponentResult random_coding_branch(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon);
TrcBound trc_lower_bound(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon);
// Same, with critical rates already known.
TrcBound trc_lower_bound(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon,
                         const CriticalRates& crit);

// Picks the larger branch; near-ties are labelled by the side of R*.
Branch select_branch(double expurgated, double random_coding, double rate, double r_star);

struct RatePoint {
  double rate = 0.0;
  double random_coding = 0.0;
  double expurgated_plus_r = 0.0;
  double trc_lb = 0.0;
  double lambda_hat = 0.0;
  double rho_hat = 0.0;
  Branch branch = Branch::random_coding;
  bool lambda_unbounded = false;
};

struct ExponentCurve {
  std::vector<RatePoint> points;
  CriticalRates critical;
};

std::vector<double> linear_grid(double lo, double hi, std::size_t count);

ExponentCurve exponent_curve(const Dmc& dmc, const EnsembleSpec& spec, std::span<const double> rates,
                             const Horizon& horizon);

} // namespace trc
