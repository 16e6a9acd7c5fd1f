#include "oracles.hpp"

#include "trc/errors.hpp"
#include "trc/exponents.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace trc;

namespace {

const double ln2 = std::numbers::ln2;

Dmc toy3() { return Dmc(3, 3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6}); }

double binary_entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

// Tilted objectives written out directly from their definitions.
double cc_objective(const oracle::Matrix& w, const std::vector<double>& q, double lambda, const std::vector<double>& a) {
  double f = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    double t = 0.0;
    for (std::size_t x2 = 0; x2 < q.size(); ++x2)
      t += q[x2] * std::pow(oracle::bhattacharyya(w, x, x2) * std::exp(a[x2]), 1.0 / lambda);
    f += q[x] * (a[x] - lambda * std::log(t));
  }
  return f;
}

double cost_ex_objective(const oracle::Matrix& w, const std::vector<double>& q, double lambda,
                         const std::vector<double>& cost, double r, double r2) {
  double phi = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) phi += q[x] * cost[x];
  double s = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x)
    for (std::size_t x2 = 0; x2 < q.size(); ++x2)
      s += q[x] * q[x2] * std::pow(oracle::bhattacharyya(w, x, x2), 1.0 / lambda) *
           std::exp(r2 * (cost[x2] - phi) - r * (cost[x] - phi));
  return -lambda * std::log(s);
}

double cost_e0_objective(const oracle::Matrix& w, const std::vector<double>& q, double rho,
                         const std::vector<double>& cost, double r) {
  double phi = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) phi += q[x] * cost[x];
  double total = 0.0;
  for (std::size_t y = 0; y < w[0].size(); ++y) {
    double u = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) u += q[x] * std::exp(r * (cost[x] - phi)) * std::pow(w[x][y], 1 / (1 + rho));
    total += std::pow(u, 1 + rho);
  }
  return -std::log(total);
}

// Alternating golden-section polish of a concave 2-D function.
std::pair<double, double> polish2(const std::function<double(double, double)>& f, double u, double v, double h) {
  for (int sweep = 0; sweep < 60; ++sweep) {
    u = oracle::polish([&](double t) { return f(t, v); }, u - h, u + h).arg;
    v = oracle::polish([&](double t) { return f(u, t); }, v - h, v + h).arg;
  }
  return {u, v};
}

} // namespace

TEST_CASE("gallager_e0") {
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  CHECK(gallager_e0(bsc, u, 0.0) == 0.0);
  CHECK(gallager_e0(bsc, u, 1.0) == doctest::Approx(oracle::bsc_e0(0.1, 1.0)).epsilon(1e-13));
  CHECK(gallager_e0(bsc, u, 1.0) == doctest::Approx(0.22314355131420976).epsilon(1e-12));
  for (double rho : {0.0, 0.3, 1.0}) CHECK(std::abs(gallager_e0(make_bsc(0.5), u, rho)) < 1e-15);

  oracle::Random rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = rng.dmc(2 + rng.index(3), 2 + rng.index(3));
    const auto q = rng.simplex(d.input_size());
    const double rho = rng.uniform(0.0, 1.0);
    CHECK(gallager_e0(d, InputDistribution(q), rho) ==
          doctest::Approx(oracle::e0(oracle::rows(d), q, rho)).epsilon(1e-12));
    const double h = 1e-6;
    const double fd = (oracle::e0(oracle::rows(d), q, rho + h) - oracle::e0(oracle::rows(d), q, rho - h)) / (2 * h);
    CHECK(std::abs(gallager_e0_derivative(d, InputDistribution(q), rho) - fd) < 1e-7);
  }
  CHECK_THROWS_AS(gallager_e0(bsc, u, -0.1), DomainError);
  CHECK_THROWS_AS(gallager_e0(bsc, InputDistribution::uniform(3), 0.5), DomainError);
}

TEST_CASE("random_coding_exponent") {
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  const auto zero = random_coding_exponent(bsc, u, 0.0);
  CHECK(zero.optimizer == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(zero.value == doctest::Approx(oracle::bsc_e0(0.1, 1.0)).epsilon(1e-12));

  const double capacity = ln2 - binary_entropy(0.1);
  CHECK(random_coding_exponent(bsc, u, capacity).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(random_coding_exponent(bsc, u, capacity + 0.05).value == 0.0);

  const auto f = [](double rho) { return oracle::bsc_e0(0.1, rho) - rho * 0.05; };
  const auto grid = oracle::grid_max(f, 0.0, 1.0, 1e-4);
  const auto r = random_coding_exponent(bsc, u, 0.05);
  CHECK(std::abs(r.value - grid.value) < 1e-8);
  CHECK(r.value >= grid.value - 1e-14);
  CHECK(std::abs(r.optimizer - grid.arg) < 2e-4);
}

TEST_CASE("critical_rates") {
  const auto u = InputDistribution::uniform(2);
  CHECK(critical_rates(make_bsc(0.5), u).r_cr == 0.0);
  const auto c = critical_rates(make_bsc(0.1), u);
  const double h = 1e-6;
  const double fd = (oracle::bsc_e0(0.1, 1 + h) - oracle::bsc_e0(0.1, 1 - h)) / (2 * h);
  CHECK(std::abs(c.r_cr - fd) < 1e-8);
  // For the BSC, E0' at rho = 1 is log 2 - h(sqrt p / (sqrt p + sqrt(1-p))).
  const double pt = std::sqrt(0.1) / (std::sqrt(0.1) + std::sqrt(0.9));
  CHECK(c.r_cr == doctest::Approx(ln2 - binary_entropy(pt)).epsilon(1e-12));
  CHECK(c.r_star == 0.5 * c.r_cr);
}

TEST_CASE("ex_iid") {
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  CHECK(ex_iid(bsc, u, 1.0) == doctest::Approx(-std::log(0.8)).epsilon(1e-14));
  for (double lambda : {1.0, 3.0, 100.0}) CHECK(ex_iid(bsc, InputDistribution({1.0, 0.0}), lambda) == 0.0);
  CHECK(ex_iid(make_bsc(0.0), u, 5.0) == doctest::Approx(5 * ln2).epsilon(1e-14));

  oracle::Random rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = rng.dmc(2 + rng.index(3), 2 + rng.index(3));
    const auto q = rng.simplex(d.input_size());
    const double lambda = rng.uniform(1.0, 20.0);
    CHECK(ex_iid(d, InputDistribution(q), lambda) == doctest::Approx(oracle::ex(oracle::rows(d), q, lambda)).epsilon(1e-11));
  }
  CHECK_THROWS_AS(ex_iid(bsc, u, 0.5), DomainError);
}

TEST_CASE("ex_lambda_derivative matches finite differences") {
  const auto u = InputDistribution::uniform(2);
  const auto bsc = make_bsc(0.1);
  const double h = 1e-5;
  const double fd = (ex_iid(bsc, u, 2 + h) - ex_iid(bsc, u, 2 - h)) / (2 * h);
  CHECK(std::abs(ex_lambda_derivative(bsc, u, 2.0) - fd) <= 1e-8);

  const Dmc useless(2, 3, {0.2, 0.3, 0.5, 0.2, 0.3, 0.5});
  CHECK(std::abs(ex_lambda_derivative(useless, u, 3.0)) < 1e-15);

  oracle::Random rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = rng.dmc(2 + rng.index(3), 2 + rng.index(3));
    const InputDistribution q(rng.simplex(d.input_size()));
    for (double lambda : {1.0, 1.5, 2.0, 5.0, 10.0}) {
      const auto z = bhattacharyya_matrix(d);
      const double g = (ex_iid(z, q, lambda + h) - ex_iid(z, q, lambda - h)) / (2 * h);
      const double dd = ex_lambda_derivative(d, q, lambda);
      CHECK(std::abs(g - dd) <= 1e-8);
      CHECK(dd >= 0.0);
    }
  }
}

TEST_CASE("ex_cc") {
  SUBCASE("symmetric channel keeps the zero tilt") {
    const auto bsc = make_bsc(0.1);
    const auto u = InputDistribution::uniform(2);
    for (double lambda : {1.0, 2.0, 7.0}) {
      const std::vector<double> zero{0.0, 0.0};
      const double at_zero = ex_cc_objective(bsc, u, lambda, zero);
      CHECK(std::abs(ex_cc(bsc, u, lambda) - at_zero) <= 1e-9);
      CHECK(at_zero == doctest::Approx(cc_objective(oracle::rows(bsc), {0.5, 0.5}, lambda, zero)).epsilon(1e-13));
    }
  }
  SUBCASE("asymmetric toy channel against a grid oracle") {
    const auto d = toy3();
    const auto w = oracle::rows(d);
    const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const double lambda = 2.0;
    const auto f = [&](double a1, double a2) { return cc_objective(w, q, lambda, {0.0, a1, a2}); };
    double best = -1e300, b1 = 0, b2 = 0;
    for (double a1 = -3.0; a1 <= 3.0; a1 += 0.01)
      for (double a2 = -3.0; a2 <= 3.0; a2 += 0.01)
        if (const double v = f(a1, a2); v > best) best = v, b1 = a1, b2 = a2;
    const auto [p1, p2] = polish2(f, b1, b2, 0.02);
    const double oracle_value = f(p1, p2);
    const auto r = ex_cc_detailed(d, InputDistribution(q), lambda);
    CHECK(std::abs(r.value - oracle_value) <= 1e-6);
    CHECK(r.tilt[0] == 0.0);
    CHECK(std::abs(r.tilt[1] - p1) < 1e-3);
    CHECK(std::abs(r.tilt[2] - p2) < 1e-3);
    CHECK(r.value >= ex_iid(d, InputDistribution(q), lambda) - 1e-12);
  }
  SUBCASE("cc dominates iid") {
    oracle::Random rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const auto d = rng.dmc(2 + rng.index(3), 2 + rng.index(3));
      const InputDistribution q(rng.simplex(d.input_size()));
      const double lambda = rng.uniform(1.0, 10.0);
      CHECK(ex_cc(d, q, lambda) >= ex_iid(d, q, lambda) - 1e-10);
    }
  }
}

TEST_CASE("ex_cost") {
  const auto d = toy3();
  const auto w = oracle::rows(d);
  const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const InputDistribution qd(q);

  SUBCASE("zero tilt and constant cost reduce to iid") {
    const std::vector<CostFunction> costs{{0.0, 1.0, 2.0}};
    const std::vector<double> zero{0.0, 0.0};
    CHECK(std::abs(ex_cost_objective(d, qd, 2.0, costs, zero) - ex_iid(d, qd, 2.0)) <= 1e-12);
    const std::vector<CostFunction> flat{{1.5, 1.5, 1.5}};
    CHECK(std::abs(ex_cost(d, qd, 2.0, flat) - ex_iid(d, qd, 2.0)) <= 1e-12);
  }
  SUBCASE("toy channel against a grid oracle") {
    const std::vector<double> cost{0.0, 1.0, 2.0};
    const auto f = [&](double r, double r2) { return cost_ex_objective(w, q, 2.0, cost, r, r2); };
    double best = -1e300, b1 = 0, b2 = 0;
    for (double r = -5.0; r <= 5.0; r += 0.01)
      for (double r2 = -5.0; r2 <= 5.0; r2 += 0.01)
        if (const double v = f(r, r2); v > best) best = v, b1 = r, b2 = r2;
    const auto [p1, p2] = polish2(f, b1, b2, 0.02);
    const auto res = ex_cost_detailed(d, qd, 2.0, std::vector<CostFunction>{cost});
    CHECK(std::abs(res.value - f(p1, p2)) <= 1e-6);
    CHECK_FALSE(res.on_boundary);
  }
  SUBCASE("indicator costs sit between iid and constant composition") {
    oracle::Random rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t nx = 2 + rng.index(2);
      const auto dd = rng.dmc(nx, 2 + rng.index(3));
      const InputDistribution qq(rng.simplex(nx));
      std::vector<CostFunction> ind(nx, CostFunction(nx, 0.0));
      for (std::size_t l = 0; l < nx; ++l) ind[l][l] = 1.0;
      const double lambda = rng.uniform(1.0, 6.0);
      const double c = ex_cost(dd, qq, lambda, ind);
      CHECK(c >= ex_iid(dd, qq, lambda) - 1e-10);
      CHECK(c <= ex_cc(dd, qq, lambda) + 1e-8);
    }
  }
}

TEST_CASE("e0_cost") {
  const auto d = toy3();
  const auto w = oracle::rows(d);
  const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const InputDistribution qd(q);
  const std::vector<double> cost{0.0, 1.0, 2.0};
  const std::vector<CostFunction> costs{cost};

  const std::vector<double> zero{0.0};
  for (double rho : {0.0, 0.5, 1.0})
    CHECK(std::abs(e0_cost_objective(d, qd, rho, costs, zero) - gallager_e0(d, qd, rho)) <= 1e-12);
  CHECK(e0_cost(d, qd, 0.0, costs) == 0.0);
  const std::vector<double> tilt{1.7};
  CHECK(e0_cost_objective(d, qd, 0.0, costs, tilt) < 0.0);

  const auto f = [&](double r) { return cost_e0_objective(w, q, 1.0, cost, r); };
  const auto g = oracle::grid_max(f, -5.0, 5.0, 1e-4);
  const auto p = oracle::polish(f, g.arg - 2e-4, g.arg + 2e-4);
  CHECK(std::abs(e0_cost(d, qd, 1.0, costs) - p.value) <= 1e-6);
  CHECK(e0_cost(d, qd, 1.0, costs) >= gallager_e0(d, qd, 1.0) - 1e-12);
  CHECK(std::abs(e0_cost_objective(d, qd, 1.0, costs, std::vector<double>{0.3}) - f(0.3)) < 1e-12);
}

TEST_CASE("mismatched exponents") {
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  const std::vector<double> metric(bsc.values().begin(), bsc.values().end());
  for (double rho : {0.0, 0.5, 1.0})
    CHECK(std::abs(mismatched_e0(bsc, metric, u, rho, 1.0 / (1.0 + rho)) - gallager_e0(bsc, u, rho)) <= 1e-12);
  CHECK(std::abs(mismatched_ex(bsc, metric, u, 1.0, 0.5) - ex_iid(bsc, u, 1.0)) <= 1e-12);
  CHECK(std::abs(mismatched_e0(bsc, metric, u, 0.7, 0.0)) <= 1e-15);

  oracle::Random rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = rng.dmc(3, 3);
    const InputDistribution q(rng.simplex(3));
    const std::vector<double> m(d.values().begin(), d.values().end());
    const double rho = rng.uniform(0, 1);
    CHECK(std::abs(mismatched_e0(d, m, q, rho, 1 / (1 + rho)) - gallager_e0(d, q, rho)) <= 1e-12);
  }
  std::vector<double> bad = metric;
  bad[1] = 0.0;
  CHECK_THROWS_AS(mismatched_e0(bsc, bad, u, 0.5, 0.5), DomainError);
}

TEST_CASE("r_infinity and nu moments") {
  const auto u = InputDistribution::uniform(2);
  CHECK(r_infinity(u, bhattacharyya_matrix(make_bsc(0.2))) == 0.0);
  CHECK(r_infinity(u, bhattacharyya_matrix(make_bsc(0.0))) == doctest::Approx(ln2 / 2).epsilon(1e-14));
  CHECK(r_infinity(InputDistribution({1.0, 0.0}), bhattacharyya_matrix(make_bsc(0.0))) == 0.0);

  const auto m = nu_moments(make_bsc(0.1), u);
  CHECK(m.finite);
  CHECK(m.nu0 == doctest::Approx(-0.5 * std::log(0.6)).epsilon(1e-14));
  CHECK(m.nu1 == doctest::Approx(0.5 * 0.25 * std::log(0.6) * std::log(0.6)).epsilon(1e-14));

  const Dmc useless(2, 2, {0.3, 0.7, 0.3, 0.7});
  const auto z = nu_moments(useless, u);
  CHECK(std::abs(z.nu0) < 1e-15);
  CHECK(std::abs(z.nu1) < 1e-15);
  CHECK_FALSE(nu_moments(make_bsc(0.0), u).finite);
}

TEST_CASE("nu moments are the large-lambda expansion of each ensemble") {
  const auto d = toy3();
  const InputDistribution q({0.2, 0.5, 0.3});
  const double lambda = 2000.0;
  const auto check = [&](const EnsembleSpec& spec) {
    const auto nu = nu_moments(d, spec);
    CHECK(ex_for(d, spec, lambda) < nu.nu0);
    const double slope = lambda * (nu.nu0 - ex_for(d, spec, lambda));
    CHECK(slope == doctest::Approx(nu.nu1).epsilon(5e-3));
  };
  check(EnsembleSpec::iid(q));
  check(EnsembleSpec::constant_composition(q));
  check(EnsembleSpec::cost_constrained(q, {{0.0, 1.0, 2.0}}, 1.0));
  const auto iid = nu_moments(d, EnsembleSpec::iid(q)).nu1;
  const auto cc = nu_moments(d, EnsembleSpec::constant_composition(q)).nu1;
  const auto cost = nu_moments(d, EnsembleSpec::cost_constrained(q, {{0.0, 1.0, 2.0}}, 1.0)).nu1;
  CHECK(cc <= cost + 1e-15);
  CHECK(cost <= iid + 1e-15);
}

TEST_CASE("lambda_hat_growth") {
  CHECK(lambda_hat_growth(0.0, 2.0, 1e8, 10000) == 0.0);
  CHECK_THROWS_AS(lambda_hat_growth(0.1, 1.0, 1.0, 10), DomainError);
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  const double nu1 = nu_moments(bsc, u).nu1;
  const std::size_t n = 10000;
  const double expected = std::sqrt(nu1 / ((2 * ln2 + 2 * std::log(1e4)) / 1e4));
  CHECK(lambda_hat_growth(nu1, 2.0, 1e8, n) == doctest::Approx(expected).epsilon(1e-14));
  const double slope = 2 * ln2 / n + 2 * std::log(1e4) / n;
  const auto w = oracle::rows(bsc);
  const auto g = oracle::grid_max([&](double l) { return oracle::ex(w, {0.5, 0.5}, l) - l * slope; }, 1.0, 200.0, 1e-3);
  CHECK(std::abs(g.arg - expected) <= 0.1 * expected);
}

TEST_CASE("gamma schedules and horizons") {
  const auto p = GammaSchedule::power(2.0);
  CHECK(p(10) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(p.partial_reciprocal_sum(1000) < p.reciprocal_sum_bound());
  CHECK(p.reciprocal_sum_bound() == 2.0);
  CHECK_THROWS_AS(GammaSchedule::power(1.0), DomainError);
  const auto t = GammaSchedule::table({1.0, 4.0, 4.0, 9.0});
  CHECK(t(3) == 4.0);
  CHECK_THROWS_AS(t(5), DomainError);
  CHECK_THROWS_AS(GammaSchedule::table({2.0, 1.0}), DomainError);
  CHECK(t.partial_reciprocal_sum(4) == doctest::Approx(1.0 + 0.25 + 0.25 + 1.0 / 9).epsilon(1e-14));

  CHECK(Horizon::asymptotic().iota() == 0.0);
  CHECK(Horizon::finite(100).iota() == doctest::Approx(2 * std::log(100.0) / 100).epsilon(1e-14));
  CHECK(Horizon::finite(100).describe() == "finite_n(n=100)");
}

TEST_CASE("expurgated_branch") {
  const auto bsc = make_bsc(0.1);
  const auto u = InputDistribution::uniform(2);
  const auto spec = EnsembleSpec::iid(u);
  const auto w = oracle::rows(bsc);
  const auto ex = [&](double l) { return oracle::ex(w, {0.5, 0.5}, l); };

  SUBCASE("lambda-hat = 1 at large rates") {
    const auto h = Horizon::finite(1000);
    const auto r = expurgated_branch(bsc, spec, 0.2, h);
    CHECK(r.optimizer == 1.0);
    CHECK(r.value == doctest::Approx(ex(1.0) - 0.2 - h.iota()).epsilon(1e-12));
    CHECK(r.diagnostics.penalty == doctest::Approx(h.iota()).epsilon(1e-14));
  }
  SUBCASE("grid oracle at R = 0.01, n = 1e4") {
    const auto h = Horizon::finite(10000);
    const double slope = 0.02 + h.iota();
    const auto g = oracle::grid_max([&](double l) { return ex(l) - l * slope; }, 1.0, 200.0, 1e-3);
    const auto r = expurgated_branch(bsc, spec, 0.01, h);
    CHECK(std::abs(r.value - (g.value + 0.01)) <= 1e-6);
    CHECK(r.diagnostics.penalty == doctest::Approx(r.optimizer * h.iota()).epsilon(1e-14));
  }
  SUBCASE("R = 0 approaches nu0") {
    const double nu0 = -0.5 * std::log(0.6);
    double previous = 0.0;
    for (std::size_t n : {100u, 1000u, 10000u}) {
      const auto h = Horizon::finite(n);
      const auto g = oracle::grid_max([&](double l) { return ex(l) - l * h.iota(); }, 1.0, 200.0, 1e-3);
      const auto r = expurgated_branch(bsc, spec, 0.0, h);
      CHECK(std::abs(r.value - g.value) <= 1e-6);
      CHECK(r.value < nu0);
      CHECK(r.value > previous);
      previous = r.value;
    }
    const auto a = expurgated_branch(bsc, spec, 0.0, Horizon::asymptotic());
    CHECK(a.diagnostics.unbounded_lambda);
    CHECK(a.value == doctest::Approx(nu0).epsilon(1e-14));
  }
  SUBCASE("zero-error channel") {
    const auto id = make_bsc(0.0);
    const auto below = expurgated_branch(id, spec, 0.1, Horizon::asymptotic());
    CHECK(below.diagnostics.unbounded_lambda);
    CHECK(below.value == std::numeric_limits<double>::infinity());
    const auto above = expurgated_branch(id, spec, 0.4, Horizon::asymptotic());
    CHECK(above.value == doctest::Approx(ln2 - 0.4).epsilon(1e-12));
    CHECK(expurgated_branch(id, spec, 0.0, Horizon::asymptotic()).value == std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("trc_lower_bound and branch selection") {
  const auto bsc = make_bsc(0.1);
  const auto spec = EnsembleSpec::iid(InputDistribution::uniform(2));
  const auto crit = critical_rates(bsc, spec);
  const auto zero = trc_lower_bound(bsc, spec, 0.0, Horizon::asymptotic());
  CHECK(zero.branch == Branch::expurgated_2r);
  CHECK(zero.expurgated.value > zero.random_coding.value);
  const auto high = trc_lower_bound(bsc, spec, crit.r_star + 0.01, Horizon::asymptotic());
  CHECK(high.branch == Branch::random_coding);

  // The two branches meet at R*.
  const auto at = trc_lower_bound(bsc, spec, crit.r_star, Horizon::asymptotic());
  CHECK(std::abs(at.expurgated.value - at.random_coding.value) <= 1e-9);

  CHECK(select_branch(1.0, 1.0, 0.1, 0.2) == Branch::expurgated_2r);
  CHECK(select_branch(1.0, 1.0, 0.3, 0.2) == Branch::random_coding);
  CHECK(select_branch(1.1, 1.0, 0.3, 0.2) == Branch::expurgated_2r);
  CHECK(select_branch(std::numeric_limits<double>::infinity(), 1.0, 0.3, 0.2) == Branch::expurgated_2r);
  CHECK(std::string(to_string(Branch::expurgated_2r)) == "expurgated_2R");
}

TEST_CASE("exponent_curve") {
  const auto bsc = make_bsc(0.1);
  for (const auto& spec : {EnsembleSpec::iid(InputDistribution::uniform(2)),
                           EnsembleSpec::constant_composition(InputDistribution::uniform(2))}) {
    const auto rates = linear_grid(0.0, 0.4, 41);
    const auto c = exponent_curve(bsc, spec, rates, Horizon::finite(1000));
    REQUIRE(c.points.size() == 41);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].trc_lb <= c.points[i - 1].trc_lb + 1e-12);
      CHECK(std::abs(c.points[i].trc_lb - std::max(c.points[i].random_coding, c.points[i].expurgated_plus_r)) <= 1e-12);
    }
    CHECK(c.points.front().branch == Branch::expurgated_2r);
    CHECK(c.points.back().branch == Branch::random_coding);
  }
  const std::vector<double> bad{0.1, 0.05};
  CHECK_THROWS_AS(exponent_curve(bsc, EnsembleSpec::iid(InputDistribution::uniform(2)), bad, Horizon::asymptotic()),
                  DomainError);
}
