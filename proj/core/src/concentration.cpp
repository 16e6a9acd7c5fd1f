#include "trc/concentration.hpp"

#include "trc/errors.hpp"
#include "trc/numeric.hpp"
#include "trc/parallel.hpp"
#include "trc/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace trc {

namespace {

std::size_t output_count(const Codebook& cb, const Dmc& dmc, std::size_t budget) {
  if (cb.n == 0 || cb.words.empty()) throw DomainError("codebook is empty");
  for (const auto& w : cb.words) {
    if (w.size() != cb.n) throw DomainError("codeword length differs from n");
    for (Symbol s : w)
      if (s >= dmc.input_size()) throw DomainError("codeword symbol out of range");
  }
  const std::size_t total = checked_pow(dmc.output_size(), cb.n, budget);
  if (total == 0) {
    std::ostringstream os;
    os << "output enumeration |Y|^n = " << dmc.output_size() << "^" << cb.n << " exceeds the budget " << budget;
    throw CapacityError(os.str());
  }
  return total;
}

// Log-likelihoods of every codeword for one output sequence, summed over the
// joint type in a fixed order so equal types give bit-equal values.
struct LikelihoodScorer {
  const Dmc& dmc;
  const Codebook& cb;
  std::vector<double> log_w;
  std::vector<std::size_t> counts;

  LikelihoodScorer(const Dmc& d, const Codebook& c) : dmc(d), cb(c) {
    const std::size_t nx = d.input_size(), ny = d.output_size();
    log_w.resize(nx * ny);
    for (Symbol x = 0; x < nx; ++x)
      for (Symbol y = 0; y < ny; ++y)
        log_w[x * ny + y] = d(x, y) > 0.0 ? std::log(d(x, y)) : -std::numeric_limits<double>::infinity();
    counts.resize(nx * ny);
  }

  double operator()(std::size_t m, std::span<const Symbol> y) {
    std::fill(counts.begin(), counts.end(), 0);
    const std::size_t ny = dmc.output_size();
    for (std::size_t t = 0; t < y.size(); ++t) ++counts[cb.words[m][t] * ny + y[t]];
    double ll = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i]) ll += static_cast<double>(counts[i]) * log_w[i];
    return ll;
  }
};

void next_sequence(std::vector<Symbol>& y, std::size_t k) {
  for (std::size_t t = y.size(); t-- > 0;) {
    if (++y[t] < k) return;
    y[t] = 0;
  }
}

} // namespace

double exact_ml_error_prob(const Codebook& cb, const Dmc& dmc, std::size_t budget) {
  const std::size_t total = output_count(cb, dmc, budget);
  const std::size_t m = cb.size();
  if (m == 1) return 0.0;
  LikelihoodScorer score(dmc, cb);
  std::vector<double> ll(m), per_y(total);
  std::vector<Symbol> y(cb.n, 0);
  for (std::size_t i = 0; i < total; ++i, next_sequence(y, dmc.output_size())) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < m; ++j) {
      ll[j] = score(j, y);
      if (j == 0 || ll[j] == -std::numeric_limits<double>::infinity()) continue;
      if (ll[best] == -std::numeric_limits<double>::infinity() || ll[j] > ll[best] + 1e-12 * (1.0 + std::abs(ll[best])))
        best = j;
    }
    double miss = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != best) miss += std::exp(ll[j]);
    per_y[i] = miss;
  }
  return pairwise_sum(per_y) / static_cast<double>(m);
}

double gallager_bound_per_code(const Codebook& cb, const Dmc& dmc, double rho, std::size_t budget) {
  if (!(rho >= 0.0)) throw DomainError("gallager_bound_per_code: rho must be nonnegative");
  const std::size_t total = output_count(cb, dmc, budget);
  const std::size_t m = cb.size();
  if (m == 1) return 0.0;
  LikelihoodScorer score(dmc, cb);
  const double s = 1.0 / (1.0 + rho);
  std::vector<double> root(m), per_y(total);
  std::vector<Symbol> y(cb.n, 0);
  for (std::size_t i = 0; i < total; ++i, next_sequence(y, dmc.output_size())) {
    double all = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      root[j] = std::exp(s * score(j, y));
      all += root[j];
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double others = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) others += root[k];
      acc += root[j] * safe_pow(others, rho);
    }
    per_y[i] = acc;
  }
  return pairwise_sum(per_y) / static_cast<double>(m);
}

void ExperimentConfig::validate() const {
  if (n == 0) throw DomainError("experiment: n must be positive");
  if (m == 0) throw DomainError("experiment: M must be positive");
  if (codebooks == 0) throw DomainError("experiment: number of codebooks must be positive");
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("experiment: s must lie in (0,1]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("experiment: gamma must be positive");
  if (ensemble.q.size() != channel.input_size()) throw DomainError("experiment: ensemble alphabet does not match channel");
  ensemble.validate();
  if (checked_pow(channel.output_size(), n, budget) == 0)
    throw CapacityError("experiment: |Y|^n exceeds the enumeration budget");
}

std::vector<double> codebook_error_probs(const ExperimentConfig& config, std::size_t first, std::size_t count,
                                         unsigned threads) {
  config.validate();
  std::vector<double> pe(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        const auto cb = sample_codebook(config.ensemble, config.n, config.m, derive_seed(config.seed, first + i));
        pe[i] = exact_ml_error_prob(cb, config.channel, config.budget);
      },
      threads);
  return pe;
}

MomentEstimate tilted_moment(std::span<const double> pe, double s) {
  if (pe.empty()) throw DomainError("tilted_moment: no samples");
  std::vector<double> v(pe.size());
  for (std::size_t i = 0; i < pe.size(); ++i) v[i] = safe_pow(pe[i], s);
  const auto mv = mean_variance(v);
  return MomentEstimate{mv.mean, std::sqrt(mv.variance / static_cast<double>(mv.count)), mv.count};
}

MomentEstimate tilted_moment(const ExperimentConfig& config) {
  return tilted_moment(codebook_error_probs(config, 0, config.codebooks), config.s);
}

ViolationReport markov_violation_rate(std::span<const double> first_batch, std::span<const double> second_batch,
                                      double s, double gamma) {
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("markov_violation_rate: s must lie in (0,1]");
  if (!(gamma > 0.0)) throw DomainError("markov_violation_rate: gamma must be positive");
  if (second_batch.empty()) throw DomainError("markov_violation_rate: empty second batch");
  const auto mom = tilted_moment(first_batch, s);
  ViolationReport r;
  r.moment = mom.mean;
  r.moment_stderr = mom.stderr_mean;
  r.threshold = std::pow(gamma * mom.mean, 1.0 / s);
  r.count = second_batch.size();
  for (double pe : second_batch) {
    // A zero threshold is only exceeded by strictly positive error probabilities.
    const bool hit = r.threshold > 0.0 ? pe >= r.threshold : pe > 0.0;
    if (hit) ++r.violations;
  }
  r.fraction = static_cast<double>(r.violations) / static_cast<double>(r.count);
  r.bound = std::min(1.0, 1.0 / gamma);
  r.binomial_se = std::sqrt(r.bound * (1.0 - r.bound) / static_cast<double>(r.count));
  r.holds = r.fraction <= r.bound + 4.0 * r.binomial_se;
  r.vacuous = gamma <= 1.0;
  return r;
}

ViolationReport markov_violation_rate(const ExperimentConfig& config) {
  return run_concentration(config).report;
}

ConcentrationRun run_concentration(const ExperimentConfig& config, unsigned threads) {
  ConcentrationRun run;
  run.error_probs = codebook_error_probs(config, 0, 2 * config.codebooks, threads);
  const std::span<const double> all(run.error_probs);
  run.report = markov_violation_rate(all.first(config.codebooks), all.subspan(config.codebooks), config.s, config.gamma);
  return run;
}

} // namespace trc
