#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace trc {

using Symbol = std::size_t;

// Probability vector over the input alphabet.
class InputDistribution {
public:
  explicit InputDistribution(std::vector<double> q);

  static InputDistribution uniform(std::size_t size);
  static InputDistribution bernoulli(double p_one);

  std::size_t size() const noexcept { return q_.size(); }
  double operator[](Symbol x) const { return q_[x]; }
  std::span<const double> values() const noexcept { return q_; }

  // Running sums, last entry exactly 1.
  std::vector<double> cdf() const;

private:
  std::vector<double> q_;
};

// Discrete memoryless channel W(y|x), rows indexed by input.
class Dmc {
public:
  Dmc(std::size_t input_size, std::size_t output_size, std::vector<double> w);

  std::size_t input_size() const noexcept { return nx_; }
  std::size_t output_size() const noexcept { return ny_; }
  double operator()(Symbol x, Symbol y) const { return w_[x * ny_ + y]; }
  std::span<const double> row(Symbol x) const { return {w_.data() + x * ny_, ny_}; }
  std::span<const double> values() const noexcept { return w_; }

private:
  std::size_t nx_;
  std::size_t ny_;
  std::vector<double> w_;
};

// Finite-state channel with kernel p(y, s | x, s_prev).
// Kernel storage is row-major over (s_prev, x, y, s).
class Fsc {
public:
  Fsc(std::size_t num_states, std::size_t input_size, std::size_t output_size,
      std::vector<double> kernel);

  std::size_t num_states() const noexcept { return ns_; }
  std::size_t input_size() const noexcept { return nx_; }
  std::size_t output_size() const noexcept { return ny_; }

  double operator()(std::size_t s_prev, Symbol x, Symbol y, std::size_t s) const {
    return k_[((s_prev * nx_ + x) * ny_ + y) * ns_ + s];
  }
  std::span<const double> values() const noexcept { return k_; }

  // True when the new state is a function of (s_prev, y), so that the
  // receiver can track the state sequence from the output and s0.
  bool state_revealing() const;

private:
  std::size_t ns_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<double> k_;
};

Dmc make_bsc(double p);

// Channel with a single state, equivalent to the given DMC.
Fsc make_single_state_fsc(const Dmc& dmc);

// Two-state channel: state flips with probability q, output is a BSC with
// crossover p_{s_prev}. With state_revealing the output alphabet becomes
// {0,1} x {state}, encoded as y = bit + 2 * s_new.
Fsc make_two_state_bsc_fsc(double q, double p0, double p1, bool state_revealing = false);

// Memoryless channel seen by a receiver of the state-revealing two-state
// channel when q = 1/2: W((b, s) | x) = BSC_{p_s}(b | x) / 2.
Dmc make_two_state_reference_dmc(double p0, double p1);

double bhattacharyya(const Dmc& dmc, Symbol x, Symbol x2);

// |X| x |X| matrix of Bhattacharyya coefficients, row-major.
std::vector<double> bhattacharyya_matrix(const Dmc& dmc);

// Table p_n(y, s_n | x, s0). Output sequences are indexed lexicographically
// with y_1 most significant; the table is row-major over (y_index, s_n).
struct JointOutputTable {
  std::size_t n = 0;
  std::size_t output_size = 0;
  std::size_t num_states = 0;
  std::size_t num_sequences = 0;
  std::vector<double> p;

  double operator()(std::size_t y_index, std::size_t s) const { return p[y_index * num_states + s]; }
  // Marginal over the final state: W^n(y | x, s0).
  std::vector<double> marginal() const;
};

inline constexpr std::size_t default_enumeration_budget = std::size_t{1} << 20;

JointOutputTable fsc_joint_output(const Fsc& fsc, std::span<const Symbol> x, std::size_t s0,
                                  std::size_t budget = default_enumeration_budget);

// (1/A) sum_{s0} W^n(y | x, s0) by forward recursion along y.
double fsc_avg_likelihood(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y);

// log W^n(y | x, s0) with per-step rescaling.
double fsc_log_likelihood(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y,
                          std::size_t s0);

// Channel description text format:
//   type: dmc | fsc
//   states: A        (fsc only)
//   inputs: |X|
//   outputs: |Y|
//   probabilities:   (dmc, row-major W(y|x))
//   kernel:          (fsc, row-major over (s_prev, x, y, s))
//   <numbers, whitespace separated, any line layout>
// Lines starting with '#' are comments.
using ChannelDescription = std::variant<Dmc, Fsc>;

ChannelDescription parse_channel(std::istream& in);
ChannelDescription load_channel(const std::string& path);
void write_channel(std::ostream& out, const Dmc& dmc);
void write_channel(std::ostream& out, const Fsc& fsc);

} // namespace trc
