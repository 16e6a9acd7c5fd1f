#pragma once

#include "trc/channel.hpp"
#include "trc/exponents.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace trc {

// beta(s, s', x, x') = sum_y sqrt(p(y,s|x,s') p(y,s|x',s')) for every input
// pair. Each matrix has rows indexed by the new state and columns by the
// previous state, so one channel use maps a column vector v to A v.
class BhattMatrixSet {
public:
  BhattMatrixSet(std::size_t num_states, std::size_t input_size, std::vector<double> beta);

  std::size_t num_states() const noexcept { return ns_; }
  std::size_t input_size() const noexcept { return nx_; }
  double operator()(Symbol x, Symbol x2, std::size_t s_new, std::size_t s_prev) const {
    return beta_[((x * nx_ + x2) * ns_ + s_new) * ns_ + s_prev];
  }
  std::span<const double> matrix(Symbol x, Symbol x2) const {
    return {beta_.data() + (x * nx_ + x2) * ns_ * ns_, ns_ * ns_};
  }

private:
  std::size_t ns_;
  std::size_t nx_;
  std::vector<double> beta_;
};

BhattMatrixSet build_bhatt_matrices(const Fsc& fsc);

// Initial state for chains and state-known exponents: a fixed s0 or the
// uniform average over states.
struct StartState {
  std::optional<std::size_t> s0;
  static StartState averaged() { return {}; }
  static StartState fixed(std::size_t s) { return {s}; }
};

// log of 1^T A_{x_n,x'_n} ... A_{x_1,x'_1} v0, rescaled every step.
double log_chain(const BhattMatrixSet& b, std::span<const Symbol> x, std::span<const Symbol> x2,
                 const StartState& start = StartState::averaged());
// Same product in plain arithmetic (underflows for long blocks).
double linear_chain(const BhattMatrixSet& b, std::span<const Symbol> x, std::span<const Symbol> x2,
                    const StartState& start = StartState::averaged());

inline constexpr std::size_t fx_enumeration_budget = std::size_t{1} << 24;

// F_x^n(lambda, Q^n) with the initial-state-summed metric inside the root:
// -(lambda/n) log sum Q^n(x) Q^n(x') [sum_y sqrt(S(y|x) S(y|x'))]^{1/lambda},
// S(y|x) = sum_{s0} W^n(y|x,s0). Exact enumeration.
double fx_n_exact(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t n,
                  std::size_t budget = fx_enumeration_budget);

// Receiver knows s0: Z(x,x') = avg or fixed s0 of sum_y sqrt(W^n(y|x,s0) W^n(y|x',s0)).
// For state-revealing channels this is the quantity the Monte Carlo chain estimates.
double fx_n_state_known(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t n,
                        const StartState& start = StartState::averaged(),
                        std::size_t budget = fx_enumeration_budget);

// Multi-letter E0 for a fixed initial state, by enumeration.
double f0_n(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t s0,
            std::size_t budget = fx_enumeration_budget);
double f0_n_min(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n,
                std::size_t budget = fx_enumeration_budget);
// min_{s0} E0^n(rho, s0) - rho log(A)/n, the initial-state-free random-coding function.
double f0_n_gallager(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n,
                     std::size_t budget = fx_enumeration_budget);

// State-revealing channels only: E0 via the A x A matrix
// M[s'][s] = sum_y (sum_x Q(x) p(y,s|x,s')^{1/(1+rho)})^{1+rho}.
double state_known_e0_n(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t s0);
// -log spectral radius of M: the n -> infinity limit of min_{s0} E0^n.
double state_known_e0_limit(const Fsc& fsc, const InputDistribution& q, double rho);

struct McPoint {
  double lambda = 0.0;
  double mean = 0.0;        // mean of chain^{1/lambda}
  double stderr_mean = 0.0; // sample stdev / sqrt(count)
  double log_mean = 0.0;
  double rel_stderr = 0.0;  // stderr_mean / mean
  double fx = 0.0;          // -(lambda/n) log mean
  double fx_stderr = 0.0;   // delta method: (lambda/n) rel_stderr
};

struct McEstimate {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t n = 0;
  std::vector<McPoint> table;
};

// Per-sample log chain values; sample i uses the stream keyed by (seed, i).
struct McSamples {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<double> log_chain;
};

McSamples sample_log_chains(const Fsc& fsc, const InputDistribution& q, std::size_t n, std::size_t iterations,
                            std::uint64_t seed, const StartState& start = StartState::averaged(),
                            unsigned threads = 0);
McPoint estimate_at(const McSamples& samples, double lambda);
McEstimate fx_n_monte_carlo(const Fsc& fsc, const InputDistribution& q, std::span<const double> lambda_grid,
                            std::size_t n, std::size_t iterations, std::uint64_t seed,
                            const StartState& start = StartState::averaged(), unsigned threads = 0);

// Geometric grid with ratio 1.02 on [1, 64] continued with ratio 1.25 up to 1e4.
std::vector<double> default_lambda_grid();
// Geometric grid {1, 1.25, ..., 64}.
std::vector<double> coarse_lambda_grid();

struct FscCurveOptions {
  std::vector<double> lambda_grid = default_lambda_grid();
  StartState start = StartState::averaged();
  Horizon horizon = Horizon::asymptotic();
  std::optional<Dmc> reference;  // memoryless comparison channel
  unsigned threads = 0;
};

struct FscRatePoint {
  double rate = 0.0;
  double fsc_trc_lb = 0.0;
  Branch branch = Branch::random_coding;
  double expurgated = 0.0;
  double random_coding = 0.0;
  double dmc_reference = 0.0;  // NaN without a reference channel
  double lambda_hat = 0.0;
  double rho_hat = 0.0;
  double mc_stderr = 0.0;      // standard error of the expurgated branch at lambda_hat
};

struct FscCurve {
  std::vector<FscRatePoint> points;
  CriticalRates critical;
  McEstimate estimate;
};

FscCurve trc_curve_fsc(const Fsc& fsc, const InputDistribution& q, std::span<const double> rates, std::size_t n,
                       std::size_t iterations, std::uint64_t seed, const FscCurveOptions& options = {});

struct Lemma2Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
// F_x^{k+l} >= k/(k+l) F_x^k + l/(k+l) F_x^l, exact.
Lemma2Result lemma2_check(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t k, std::size_t l);

struct Lemma4Result {
  double fx1 = 0.0;
  double f0_1 = 0.0;
  double lower_slack = 0.0;  // fx1 - (f0_1 - log A / n)
  double upper_slack = 0.0;  // (f0_1 + log A / n) - fx1
  bool bound_ok = false;
};
// F_0^n(1) - log(A)/n <= F_x^n(1) <= F_0^n(1) + log(A)/n, with F_0 from f0_n_gallager.
Lemma4Result lemma4_check(const Fsc& fsc, const InputDistribution& q, std::size_t n);

} // namespace trc
