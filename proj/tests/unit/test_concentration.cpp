#include "oracles.hpp"

#include "trc/concentration.hpp"
#include "trc/errors.hpp"
#include "trc/exponents.hpp"
#include "trc/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace trc;

namespace {

// ML error by brute force: for each y the decoder picks the first index with
// the largest likelihood.
double brute_pe(const Codebook& cb, const Dmc& d) {
  const std::size_t n = cb.n, ny = d.output_size(), m = cb.words.size();
  double correct = 0.0;
  for (std::size_t k = 0; k < oracle::ipow(ny, n); ++k) {
    const auto y = oracle::digits(k, ny, n);
    double best = -1.0;
    std::size_t arg = 0;
    std::vector<double> lik(m);
    for (std::size_t i = 0; i < m; ++i) {
      double p = 1.0;
      for (std::size_t t = 0; t < n; ++t) p *= d(cb.words[i][t], y[t]);
      lik[i] = p;
      if (p > best * (1 + 1e-12)) best = p, arg = i;
    }
    correct += lik[arg];
  }
  return 1.0 - correct / static_cast<double>(m);
}

Codebook random_codebook(oracle::Random& rng, std::size_t n, std::size_t m, std::size_t k) {
  Codebook cb;
  cb.n = n;
  for (std::size_t i = 0; i < m; ++i) {
    Codeword w(n);
    for (auto& s : w) s = static_cast<Symbol>(rng.index(k));
    cb.words.push_back(w);
  }
  return cb;
}

ExperimentConfig bsc_config() {
  ExperimentConfig c{make_bsc(0.1), EnsembleSpec::iid(InputDistribution::uniform(2))};
  c.n = 6;
  c.m = 4;
  return c;
}

} // namespace

TEST_CASE("exact_ml_error_prob") {
  const auto bsc = make_bsc(0.1);
  Codebook rep{3, {{0, 0, 0}, {1, 1, 1}}};
  CHECK(exact_ml_error_prob(rep, bsc) == doctest::Approx(3 * 0.01 * 0.9 + 0.001).epsilon(1e-13));
  CHECK(exact_ml_error_prob(Codebook{3, {{0, 1, 0}}}, bsc) == 0.0);
  CHECK(exact_ml_error_prob(Codebook{2, {{0, 1}, {0, 1}}}, bsc) == doctest::Approx(0.5).epsilon(1e-14));

  oracle::Random rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = trial % 3 == 0 ? rng.dmc(3, 3) : make_bsc(rng.uniform(0.0, 0.5));
    const std::size_t m = 1 + rng.index(5);
    const auto cb = random_codebook(rng, 1 + rng.index(5), m, d.input_size());
    const double pe = exact_ml_error_prob(cb, d);
    CHECK(pe == doctest::Approx(brute_pe(cb, d)).epsilon(1e-12));
    CHECK(pe >= 0.0);
    CHECK(pe <= (m - 1.0) / m + 1e-12);
    CHECK(gallager_bound_per_code(cb, d, 1.0) >= pe - 1e-12);
    CHECK(gallager_bound_per_code(cb, d, 0.5) >= pe - 1e-12);
  }
  // Zero-probability outputs: the identity channel never errs on distinct words.
  CHECK(exact_ml_error_prob(Codebook{2, {{0, 0}, {1, 1}}}, make_bsc(0.0)) == 0.0);
  CHECK_THROWS_AS(exact_ml_error_prob(Codebook{21, {Codeword(21, 0)}}, bsc), CapacityError);
}

TEST_CASE("gallager_bound_per_code") {
  const auto bsc = make_bsc(0.1);
  Codebook rep{3, {{0, 0, 0}, {1, 1, 1}}};
  CHECK(gallager_bound_per_code(rep, bsc, 1.0) == doctest::Approx(0.216).epsilon(1e-13));
  CHECK(gallager_bound_per_code(Codebook{3, {{1, 0, 1}}}, bsc, 1.0) == 0.0);
  CHECK_THROWS_AS(gallager_bound_per_code(rep, bsc, -1.0), DomainError);
}

TEST_CASE("tilted moments") {
  auto c = bsc_config();
  c.codebooks = 1000;
  const auto a = tilted_moment(c);
  const auto b = tilted_moment(c);
  CHECK(a.mean == b.mean);
  CHECK(a.count == 1000);

  c.m = 1;
  CHECK(tilted_moment(c).mean == 0.0);

  auto small = bsc_config();
  small.codebooks = 1000;
  small.s = 1.0;
  auto large = small;
  large.codebooks = 10000;
  large.seed = 77;
  const auto ms = tilted_moment(small), ml = tilted_moment(large);
  CHECK(std::abs(ms.mean - ml.mean) <= 4 * std::hypot(ms.stderr_mean, ml.stderr_mean));
  // Ensemble Gallager bound at rho = 1: (M - 1) exp(-n E0(1)).
  const double e0 = gallager_e0(small.channel, small.ensemble.q, 1.0);
  CHECK(ml.mean <= 3.0 * std::exp(-6.0 * e0));

  const std::vector<double> pe{0.25, 0.04, 0.0};
  const auto m = tilted_moment(pe, 0.5);
  CHECK(m.mean == doctest::Approx((0.5 + 0.2) / 3).epsilon(1e-14));
}

TEST_CASE("codebook seeds") {
  auto c = bsc_config();
  const auto all = codebook_error_probs(c, 0, 50);
  const auto tail = codebook_error_probs(c, 20, 30, 1);
  for (std::size_t i = 0; i < 30; ++i) CHECK(all[20 + i] == tail[i]);
  const auto cb = sample_codebook(c.ensemble, c.n, c.m, derive_seed(c.seed, 7));
  CHECK(all[7] == exact_ml_error_prob(cb, c.channel));
}

TEST_CASE("Markov violation rate") {
  SUBCASE("two-batch arithmetic") {
    const std::vector<double> first{0.01, 0.01, 0.01, 0.01};
    const std::vector<double> second{0.0, 0.05, 0.2, 0.3};
    const auto r = markov_violation_rate(first, second, 1.0, 10.0);
    CHECK(r.threshold == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(r.violations == 2);
    CHECK(r.fraction == 0.5);
    CHECK(r.bound == 0.1);
    CHECK(r.binomial_se == doctest::Approx(std::sqrt(0.09 / 4)).epsilon(1e-14));
    CHECK(r.holds);  // 0.5 <= 0.1 + 4 * 0.15
    const std::vector<double> heavy(100, 0.2);
    CHECK_FALSE(markov_violation_rate(first, heavy, 1.0, 10.0).holds);
    // A zero threshold counts only strictly positive error probabilities.
    const std::vector<double> zeros(4, 0.0);
    CHECK(markov_violation_rate(zeros, second, 0.5, 10.0).violations == 3);
  }
  SUBCASE("tail bound holds on the BSC") {
    auto c = bsc_config();
    c.codebooks = 3000;
    for (double s : {0.25, 1.0}) {
      c.s = s;
      const auto r = markov_violation_rate(c);
      CHECK(r.holds);
      CHECK(r.count == 3000);
    }
  }
  SUBCASE("gamma at most one is vacuous") {
    auto c = bsc_config();
    c.codebooks = 200;
    c.gamma = 1.0;
    const auto r = markov_violation_rate(c);
    CHECK(r.vacuous);
    CHECK(r.holds);
    CHECK(r.fraction <= 1.0);
  }
  SUBCASE("degenerate ensemble has no spread") {
    auto c = bsc_config();
    c.ensemble = EnsembleSpec::iid(InputDistribution({1.0, 0.0}));
    c.codebooks = 200;
    const auto run = run_concentration(c);
    for (double pe : run.error_probs) CHECK(pe == run.error_probs.front());
    CHECK(run.report.violations == 0);
    CHECK(run.report.fraction == 0.0);
  }
}

TEST_CASE("ExperimentConfig validation") {
  auto c = bsc_config();
  c.s = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = bsc_config();
  c.codebooks = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = bsc_config();
  c.n = 25;
  CHECK_THROWS_AS(c.validate(), CapacityError);
  c = bsc_config();
  c.gamma = -1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}
