#pragma once

#include "trc/channel.hpp"
#include "trc/ensemble.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace trc {

inline constexpr std::size_t ml_enumeration_budget = std::size_t{1} << 20;

// Error probability of ML decoding with equiprobable messages, by enumerating
// all outputs. Likelihood ties (relative 1e-12) go to the lowest index.
double exact_ml_error_prob(const Codebook& cb, const Dmc& dmc, std::size_t budget = ml_enumeration_budget);

// (1/M) sum_m sum_y W(y|x_m)^{1/(1+rho)} (sum_{m' != m} W(y|x_m')^{1/(1+rho)})^rho.
double gallager_bound_per_code(const Codebook& cb, const Dmc& dmc, double rho,
                               std::size_t budget = ml_enumeration_budget);

struct ExperimentConfig {
  Dmc channel;
  EnsembleSpec ensemble;
  std::size_t n = 6;
  std::size_t m = 4;
  std::size_t codebooks = 10000;  // T, per batch
  double s = 0.5;
  double gamma = 20.0;
  std::uint64_t seed = 1;
  std::size_t budget = ml_enumeration_budget;

  void validate() const;
};

// Codebook t is sampled with seed derive_seed(config.seed, t).
std::vector<double> codebook_error_probs(const ExperimentConfig& config, std::size_t first, std::size_t count,
                                         unsigned threads = 0);

struct MomentEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

MomentEstimate tilted_moment(std::span<const double> pe, double s);
// E[Pe^s] from codebooks [0, T).
MomentEstimate tilted_moment(const ExperimentConfig& config);

struct ViolationReport {
  double moment = 0.0;
  double moment_stderr = 0.0;
  double threshold = 0.0;      // gamma^{1/s} moment^{1/s}
  std::size_t violations = 0;
  std::size_t count = 0;
  double fraction = 0.0;
  double bound = 0.0;          // 1/gamma
  double binomial_se = 0.0;    // sqrt(bound (1 - bound) / count)
  bool holds = false;          // fraction <= bound + 4 binomial_se
  bool vacuous = false;        // gamma <= 1
};

// Moment from the first batch, violations counted on the second.
ViolationReport markov_violation_rate(std::span<const double> first_batch, std::span<const double> second_batch,
                                      double s, double gamma);
// Batches are codebooks [0, T) and [T, 2T).
ViolationReport markov_violation_rate(const ExperimentConfig& config);

struct ConcentrationRun {
  std::vector<double> error_probs;  // 2T values, batch one first
  ViolationReport report;
};

ConcentrationRun run_concentration(const ExperimentConfig& config, unsigned threads = 0);

} // namespace trc
