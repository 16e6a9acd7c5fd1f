#include "trc/exponents.hpp"

#include "trc/errors.hpp"
#include "trc/numeric.hpp"
#include "trc/optimizer.hpp"
#include "trc/parallel.hpp"
#include "trc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace trc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double tilt_radius = 50.0;

void require(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

void check_match(const Dmc& dmc, const InputDistribution& q) {
  require(dmc.input_size() == q.size(), "input distribution size does not match the channel");
}

// -log sum_y (sum_x w(x) W(y|x)^{1/(1+rho)})^{1+rho} for arbitrary weights.
double e0_weighted(const Dmc& dmc, std::span<const double> w, double rho) {
  const double s = 1.0 / (1.0 + rho);
  double total = 0.0;
  for (Symbol y = 0; y < dmc.output_size(); ++y) {
    double u = 0.0;
    for (Symbol x = 0; x < dmc.input_size(); ++x)
      if (w[x] > 0.0) u += w[x] * safe_pow(dmc(x, y), s);
    total += safe_pow(u, 1.0 + rho);
  }
  return -std::log(total);
}

// d/drho of e0_weighted.
double e0_weighted_derivative(const Dmc& dmc, std::span<const double> w, double rho) {
  const double s = 1.0 / (1.0 + rho);
  double total = 0.0, dtotal = 0.0;
  for (Symbol y = 0; y < dmc.output_size(); ++y) {
    double u = 0.0, v = 0.0;
    for (Symbol x = 0; x < dmc.input_size(); ++x) {
      const double p = dmc(x, y);
      if (w[x] <= 0.0 || p <= 0.0) continue;
      const double ps = std::pow(p, s);
      u += w[x] * ps;
      v += w[x] * ps * std::log(p);
    }
    if (u <= 0.0) continue;
    const double term = std::pow(u, 1.0 + rho);
    total += term;
    dtotal += term * (std::log(u) - s * v / u);
  }
  return -dtotal / total;
}

std::vector<double> centred_costs(const InputDistribution& q, std::span<const CostFunction> costs) {
  require(!costs.empty(), "at least one cost function is required");
  const std::size_t nx = q.size();
  std::vector<double> b(costs.size() * nx);
  for (std::size_t l = 0; l < costs.size(); ++l) {
    require(costs[l].size() == nx, "cost function size does not match the input alphabet");
    double phi = 0.0;
    for (std::size_t x = 0; x < nx; ++x) phi += q[x] * costs[l][x];
    for (std::size_t x = 0; x < nx; ++x) b[l * nx + x] = costs[l][x] - phi;
  }
  return b;
}

// -lambda log sum_i w_i exp(e_i), sum_i w_i = 1, accurate when all e_i are small.
double neg_scaled_log_mean_exp(std::span<const double> w, std::span<const double> e, double lambda) {
  double emax = -inf;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (w[i] > 0.0) emax = std::max(emax, std::abs(e[i]) == inf ? -inf : std::abs(e[i]));
  if (emax <= 1.0) {
    double t = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (w[i] > 0.0) t += w[i] * std::expm1(e[i]);
    return -lambda * std::log1p(t);
  }
  double m = -inf;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (w[i] > 0.0) m = std::max(m, e[i]);
  if (m == -inf) return inf;
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (w[i] > 0.0) acc += w[i] * std::exp(e[i] - m);
  return -lambda * (m + std::log(acc));
}

TiltResult best_of_starts(const ObjectiveNd& f, const GradientNd& g, std::size_t dim, const char* what) {
  TiltResult best;
  best.value = -inf;
  bool any_converged = false;
  double best_unconverged = -inf;
  for (int start = 0; start < 2; ++start) {
    std::vector<double> x0(dim, 0.0);
    if (start == 1) {
      Stream rng(0x7c3a9e1f2b5d4c68ULL, dim);
      for (auto& v : x0) v = 2.0 * rng.uniform() - 1.0;
    }
    const auto rep = ascend_multivariate(f, g, x0, tilt_radius, default_tolerance);
    if (!rep.converged) {
      best_unconverged = std::max(best_unconverged, rep.value);
      continue;
    }
    any_converged = true;
    if (rep.value > best.value) {
      best.value = rep.value;
      best.tilt = rep.argmax;
      best.on_boundary = rep.on_boundary;
    }
  }
  if (!any_converged) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": tilt optimization did not converge; best objective " << best_unconverged;
    throw ConvergenceError(os.str(), best_unconverged);
  }
  return best;
}

} // namespace

// ---------------------------------------------------------------------------
// Schedules

GammaSchedule GammaSchedule::power(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("gamma schedule: power form needs alpha > 1");
  GammaSchedule g;
  g.alpha_ = alpha;
  return g;
}

GammaSchedule GammaSchedule::table(std::vector<double> values) {
  require(!values.empty(), "gamma schedule: empty table");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] > 0.0 && std::isfinite(values[i]), "gamma schedule: entries must be positive");
    require(i == 0 || values[i] >= values[i - 1], "gamma schedule: entries must be nondecreasing");
  }
  GammaSchedule g;
  g.alpha_ = 0.0;
  g.table_ = std::move(values);
  return g;
}

double GammaSchedule::operator()(std::size_t n) const { return std::exp(log_gamma(n)); }

double GammaSchedule::log_gamma(std::size_t n) const {
  require(n >= 1, "gamma schedule: n must be positive");
  if (is_power()) return alpha_ * std::log(static_cast<double>(n));
  if (n > table_.size()) throw DomainError("gamma schedule: n beyond the end of the table");
  return std::log(table_[n - 1]);
}

double GammaSchedule::partial_reciprocal_sum(std::size_t n) const {
  double s = 0.0;
  for (std::size_t k = n; k >= 1; --k) s += std::exp(-log_gamma(k));
  return s;
}

double GammaSchedule::reciprocal_sum_bound() const {
  if (is_power()) return 1.0 + 1.0 / (alpha_ - 1.0);
  return partial_reciprocal_sum(table_.size());
}

std::string GammaSchedule::describe() const {
  std::ostringstream os;
  if (is_power())
    os << "gamma_n=n^" << alpha_;
  else
    os << "gamma_n=table(" << table_.size() << ")";
  return os.str();
}

Horizon Horizon::finite(std::size_t n, GammaSchedule schedule) {
  require(n >= 1, "finite horizon needs n >= 1");
  Horizon h;
  h.n_ = n;
  h.schedule_ = std::move(schedule);
  return h;
}

double Horizon::iota() const {
  if (is_asymptotic()) return 0.0;
  return schedule_.log_gamma(*n_) / static_cast<double>(*n_);
}

std::string Horizon::describe() const {
  if (is_asymptotic()) return "asymptotic";
  return "finite_n(n=" + std::to_string(*n_) + ")";
}

const char* to_string(Branch b) {
  return b == Branch::expurgated_2r ? "expurgated_2R" : "random_coding";
}

// ---------------------------------------------------------------------------
// Gallager functions

double gallager_e0(const Dmc& dmc, const InputDistribution& q, double rho) {
  check_match(dmc, q);
  require(rho >= 0.0, "gallager_e0: rho must be nonnegative");
  if (rho == 0.0) return 0.0;
  return e0_weighted(dmc, q.values(), rho);
}

double gallager_e0_derivative(const Dmc& dmc, const InputDistribution& q, double rho) {
  check_match(dmc, q);
  require(rho >= 0.0, "gallager_e0_derivative: rho must be nonnegative");
  return e0_weighted_derivative(dmc, q.values(), rho);
}

ExponentResult random_coding_exponent(const Dmc& dmc, const InputDistribution& q, double rate) {
  require(rate >= 0.0, "random_coding_exponent: rate must be nonnegative");
  const auto rep = maximize_concave_1d([&](double rho) { return gallager_e0(dmc, q, rho) - rho * rate; }, 0.0, 1.0);
  ExponentResult r;
  r.value = rep.value;
  r.optimizer = rep.argmax;
  r.branch = Branch::random_coding;
  r.diagnostics.iterations = rep.iterations;
  r.diagnostics.tolerance = rep.bracket_width;
  return r;
}

CriticalRates critical_rates(const Dmc& dmc, const InputDistribution& q) {
  CriticalRates c;
  c.r_cr = std::max(0.0, gallager_e0_derivative(dmc, q, 1.0));
  c.r_star = 0.5 * c.r_cr;
  return c;
}

// ---------------------------------------------------------------------------
// Expurgated functions

double ex_iid(std::span<const double> z, const InputDistribution& q, double lambda) {
  const std::size_t nx = q.size();
  require(z.size() == nx * nx, "ex_iid: Bhattacharyya matrix size mismatch");
  require(lambda > 0.0, "ex_iid: lambda must be positive");
  double t = 0.0;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < nx; ++b) {
      const double w = q[a] * q[b];
      if (w <= 0.0) continue;
      const double zz = z[a * nx + b];
      t += w * (zz > 0.0 ? std::expm1(std::log(zz) / lambda) : -1.0);
    }
  return -lambda * std::log1p(t);
}

double ex_iid(const Dmc& dmc, const InputDistribution& q, double lambda) {
  check_match(dmc, q);
  require(lambda >= 1.0, "ex_iid: lambda must be at least 1");
  return ex_iid(bhattacharyya_matrix(dmc), q, lambda);
}

double ex_lambda_derivative(std::span<const double> z, const InputDistribution& q, double lambda) {
  const std::size_t nx = q.size();
  require(z.size() == nx * nx, "ex_lambda_derivative: Bhattacharyya matrix size mismatch");
  require(lambda >= 1.0, "ex_lambda_derivative: lambda must be at least 1");
  double t = 0.0, m = 0.0;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < nx; ++b) {
      const double w = q[a] * q[b];
      const double zz = z[a * nx + b];
      if (w <= 0.0) continue;
      if (zz <= 0.0) {
        t -= w;
        continue;
      }
      const double lz = std::log(zz) / lambda;
      t += w * std::expm1(lz);
      m += w * std::exp(lz) * lz;
    }
  const double log_s = std::log1p(t);
  return std::max(0.0, m / std::exp(log_s) - log_s);
}

double ex_lambda_derivative(const Dmc& dmc, const InputDistribution& q, double lambda) {
  check_match(dmc, q);
  return ex_lambda_derivative(bhattacharyya_matrix(dmc), q, lambda);
}

namespace {

struct CcContext {
  std::size_t nx;
  std::vector<double> q;
  std::vector<double> log_z;
  double lambda;

  // Full tilt with the gauge a(0) = 0.
  std::vector<double> full(std::span<const double> free) const {
    std::vector<double> a(nx, 0.0);
    std::copy(free.begin(), free.end(), a.begin() + 1);
    return a;
  }

  // u(x, x') = (log Z(x,x') + a(x'))/lambda, log T_x = log sum_x' Q(x') e^u.
  double log_t(std::size_t x, std::span<const double> a, std::vector<double>& u) const {
    for (std::size_t b = 0; b < nx; ++b) u[b] = (log_z[x * nx + b] + a[b]) / lambda;
    return -neg_scaled_log_mean_exp(q, u, 1.0);
  }

  double value(std::span<const double> a) const {
    std::vector<double> u(nx);
    double f = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      if (q[x] <= 0.0) continue;
      f += q[x] * (a[x] - lambda * log_t(x, a, u));
    }
    return f;
  }

  void gradient(std::span<const double> a, std::span<double> g) const {
    std::vector<double> u(nx), acc(nx, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      if (q[x] <= 0.0) continue;
      const double lt = log_t(x, a, u);
      for (std::size_t b = 0; b < nx; ++b)
        if (q[b] > 0.0) acc[b] += q[x] * std::expm1(u[b] - lt);
    }
    for (std::size_t b = 0; b < g.size(); ++b) g[b] = -q[b] * acc[b];
  }
};

CcContext make_cc(const Dmc& dmc, const InputDistribution& q, double lambda) {
  check_match(dmc, q);
  require(lambda >= 1.0, "ex_cc: lambda must be at least 1");
  CcContext c{dmc.input_size(), std::vector<double>(q.values().begin(), q.values().end()), {}, lambda};
  const auto z = bhattacharyya_matrix(dmc);
  c.log_z.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) c.log_z[i] = z[i] > 0.0 ? std::log(z[i]) : -inf;
  return c;
}

} // namespace

double ex_cc_objective(const Dmc& dmc, const InputDistribution& q, double lambda, std::span<const double> a) {
  const auto c = make_cc(dmc, q, lambda);
  require(a.size() == c.nx, "ex_cc_objective: tilt size mismatch");
  return c.value(a);
}

TiltResult ex_cc_detailed(const Dmc& dmc, const InputDistribution& q, double lambda) {
  const auto c = make_cc(dmc, q, lambda);
  const std::size_t dim = c.nx - 1;
  auto f = [&](std::span<const double> v) { return c.value(c.full(v)); };
  auto g = [&](std::span<const double> v, std::span<double> out) {
    std::vector<double> full_g(c.nx);
    c.gradient(c.full(v), full_g);
    std::copy(full_g.begin() + 1, full_g.end(), out.begin());
  };
  auto best = best_of_starts(f, g, dim, "ex_cc");
  best.tilt = c.full(best.tilt);
  return best;
}

double ex_cc(const Dmc& dmc, const InputDistribution& q, double lambda) {
  return ex_cc_detailed(dmc, q, lambda).value;
}

namespace {

struct CostExContext {
  std::size_t nx;
  std::size_t nl;
  std::vector<double> w;      // Q(x)Q(x') flattened
  std::vector<double> log_z;  // flattened
  std::vector<double> b;      // centred costs, [l * nx + x]
  double lambda;

  void exponents(std::span<const double> r, std::vector<double>& e) const {
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t x2 = 0; x2 < nx; ++x2) {
        double v = log_z[x * nx + x2] / lambda;
        for (std::size_t l = 0; l < nl; ++l) v += r[nl + l] * b[l * nx + x2] - r[l] * b[l * nx + x];
        e[x * nx + x2] = v;
      }
  }

  double value(std::span<const double> r) const {
    std::vector<double> e(nx * nx);
    exponents(r, e);
    return neg_scaled_log_mean_exp(w, e, lambda);
  }

  void gradient(std::span<const double> r, std::span<double> g) const {
    std::vector<double> e(nx * nx);
    exponents(r, e);
    const double log_s = -neg_scaled_log_mean_exp(w, e, 1.0);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t x2 = 0; x2 < nx; ++x2) {
        const std::size_t i = x * nx + x2;
        if (w[i] <= 0.0) continue;
        const double pi = w[i] * std::exp(e[i] - log_s);
        for (std::size_t l = 0; l < nl; ++l) {
          g[l] += lambda * pi * b[l * nx + x];
          g[nl + l] -= lambda * pi * b[l * nx + x2];
        }
      }
  }
};

CostExContext make_cost_ex(const Dmc& dmc, const InputDistribution& q, double lambda,
                           std::span<const CostFunction> costs) {
  check_match(dmc, q);
  require(lambda >= 1.0, "ex_cost: lambda must be at least 1");
  const std::size_t nx = q.size();
  CostExContext c{nx, costs.size(), std::vector<double>(nx * nx), {}, centred_costs(q, costs), lambda};
  const auto z = bhattacharyya_matrix(dmc);
  c.log_z.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) c.log_z[i] = z[i] > 0.0 ? std::log(z[i]) : -inf;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b2 = 0; b2 < nx; ++b2) c.w[a * nx + b2] = q[a] * q[b2];
  return c;
}

struct CostE0Context {
  const Dmc* dmc;
  std::size_t nx;
  std::size_t nl;
  std::vector<double> q;
  std::vector<double> b;
  double rho;

  // Weights Q(x) e^{r.b(x) - m}; returns m.
  double weights(std::span<const double> r, std::vector<double>& w) const {
    double m = -inf;
    std::vector<double> e(nx);
    for (std::size_t x = 0; x < nx; ++x) {
      double v = 0.0;
      for (std::size_t l = 0; l < nl; ++l) v += r[l] * b[l * nx + x];
      e[x] = v;
      if (q[x] > 0.0) m = std::max(m, v);
    }
    for (std::size_t x = 0; x < nx; ++x) w[x] = q[x] > 0.0 ? q[x] * std::exp(e[x] - m) : 0.0;
    return m;
  }

  double value(std::span<const double> r) const {
    std::vector<double> w(nx);
    const double m = weights(r, w);
    return e0_weighted(*dmc, w, rho) - (1.0 + rho) * m;
  }

  void gradient(std::span<const double> r, std::span<double> g) const {
    std::vector<double> w(nx);
    weights(r, w);
    const double s = 1.0 / (1.0 + rho);
    double total = 0.0;
    std::vector<double> dtotal(nl, 0.0);
    for (Symbol y = 0; y < dmc->output_size(); ++y) {
      double u = 0.0;
      std::vector<double> du(nl, 0.0);
      for (std::size_t x = 0; x < nx; ++x) {
        if (w[x] <= 0.0) continue;
        const double t = w[x] * safe_pow((*dmc)(x, y), s);
        u += t;
        for (std::size_t l = 0; l < nl; ++l) du[l] += t * b[l * nx + x];
      }
      if (u <= 0.0) continue;
      total += std::pow(u, 1.0 + rho);
      const double up = (1.0 + rho) * std::pow(u, rho);
      for (std::size_t l = 0; l < nl; ++l) dtotal[l] += up * du[l];
    }
    for (std::size_t l = 0; l < nl; ++l) g[l] = -dtotal[l] / total;
  }

  double rho_derivative(std::span<const double> r) const {
    std::vector<double> w(nx);
    weights(r, w);
    return e0_weighted_derivative(*dmc, w, rho);
  }
};

CostE0Context make_cost_e0(const Dmc& dmc, const InputDistribution& q, double rho,
                           std::span<const CostFunction> costs) {
  check_match(dmc, q);
  require(rho >= 0.0 && rho <= 1.0, "e0_cost: rho must lie in [0,1]");
  return CostE0Context{&dmc, q.size(), costs.size(), std::vector<double>(q.values().begin(), q.values().end()),
                       centred_costs(q, costs), rho};
}

} // namespace

double ex_cost_objective(const Dmc& dmc, const InputDistribution& q, double lambda,
                         std::span<const CostFunction> costs, std::span<const double> r) {
  const auto c = make_cost_ex(dmc, q, lambda, costs);
  require(r.size() == 2 * c.nl, "ex_cost_objective: expected 2L tilt parameters");
  return c.value(r);
}

TiltResult ex_cost_detailed(const Dmc& dmc, const InputDistribution& q, double lambda,
                            std::span<const CostFunction> costs) {
  const auto c = make_cost_ex(dmc, q, lambda, costs);
  return best_of_starts([&](std::span<const double> r) { return c.value(r); },
                        [&](std::span<const double> r, std::span<double> g) { c.gradient(r, g); }, 2 * c.nl,
                        "ex_cost");
}

double ex_cost(const Dmc& dmc, const InputDistribution& q, double lambda, std::span<const CostFunction> costs) {
  return ex_cost_detailed(dmc, q, lambda, costs).value;
}

double e0_cost_objective(const Dmc& dmc, const InputDistribution& q, double rho,
                         std::span<const CostFunction> costs, std::span<const double> r) {
  const auto c = make_cost_e0(dmc, q, rho, costs);
  require(r.size() == c.nl, "e0_cost_objective: expected L tilt parameters");
  return c.value(r);
}

TiltResult e0_cost_detailed(const Dmc& dmc, const InputDistribution& q, double rho,
                            std::span<const CostFunction> costs) {
  const auto c = make_cost_e0(dmc, q, rho, costs);
  if (rho == 0.0) return TiltResult{0.0, std::vector<double>(c.nl, 0.0), false};
  return best_of_starts([&](std::span<const double> r) { return c.value(r); },
                        [&](std::span<const double> r, std::span<double> g) { c.gradient(r, g); }, c.nl,
                        "e0_cost");
}

double e0_cost(const Dmc& dmc, const InputDistribution& q, double rho, std::span<const CostFunction> costs) {
  return e0_cost_detailed(dmc, q, rho, costs).value;
}

// ---------------------------------------------------------------------------
// Mismatched decoding

namespace {

void check_metric(const Dmc& dmc, std::span<const double> metric) {
  require(metric.size() == dmc.input_size() * dmc.output_size(), "metric size does not match the channel");
  for (Symbol x = 0; x < dmc.input_size(); ++x)
    for (Symbol y = 0; y < dmc.output_size(); ++y) {
      const double m = metric[x * dmc.output_size() + y];
      require(std::isfinite(m) && m >= 0.0, "metric entries must be finite and nonnegative");
      if (dmc(x, y) > 0.0 && m <= 0.0) {
        std::ostringstream os;
        os << "metric is zero at (x=" << x << ", y=" << y << ") where the channel has positive probability";
        throw DomainError(os.str());
      }
    }
}

double ratio_pow(double num, double den, double tau) {
  if (tau == 0.0) return 1.0;
  return safe_pow(num / den, tau);
}

} // namespace

double mismatched_e0(const Dmc& dmc, std::span<const double> metric, const InputDistribution& q, double rho,
                     double tau) {
  check_match(dmc, q);
  check_metric(dmc, metric);
  require(rho >= 0.0 && rho <= 1.0, "mismatched_e0: rho must lie in [0,1]");
  require(tau >= 0.0, "mismatched_e0: tau must be nonnegative");
  const std::size_t nx = dmc.input_size(), ny = dmc.output_size();
  double total = 0.0;
  for (Symbol x = 0; x < nx; ++x) {
    if (q[x] <= 0.0) continue;
    for (Symbol y = 0; y < ny; ++y) {
      const double w = dmc(x, y);
      if (w <= 0.0) continue;
      double inner = 0.0;
      for (Symbol x2 = 0; x2 < nx; ++x2)
        if (q[x2] > 0.0) inner += q[x2] * ratio_pow(metric[x2 * ny + y], metric[x * ny + y], tau);
      total += q[x] * w * safe_pow(inner, rho);
    }
  }
  return -std::log(total);
}

double mismatched_ex(const Dmc& dmc, std::span<const double> metric, const InputDistribution& q, double lambda,
                     double tau) {
  check_match(dmc, q);
  check_metric(dmc, metric);
  require(lambda >= 1.0, "mismatched_ex: lambda must be at least 1");
  require(tau >= 0.0, "mismatched_ex: tau must be nonnegative");
  const std::size_t nx = dmc.input_size(), ny = dmc.output_size();
  std::vector<double> pair(nx * nx);
  for (Symbol x = 0; x < nx; ++x)
    for (Symbol x2 = 0; x2 < nx; ++x2) {
      double s = 0.0;
      for (Symbol y = 0; y < ny; ++y) {
        const double w = dmc(x, y);
        if (w > 0.0) s += w * ratio_pow(metric[x2 * ny + y], metric[x * ny + y], tau);
      }
      pair[x * nx + x2] = s;
    }
  // Same evaluation as ex_iid with the pair function in place of Z.
  double t = 0.0;
  for (Symbol x = 0; x < nx; ++x)
    for (Symbol x2 = 0; x2 < nx; ++x2) {
      const double w = q[x] * q[x2];
      if (w <= 0.0) continue;
      const double v = pair[x * nx + x2];
      t += w * (v > 0.0 ? std::expm1(std::log(v) / lambda) : -1.0);
    }
  return -lambda * std::log1p(t);
}

// ---------------------------------------------------------------------------
// Unbounded-lambda diagnostics

double r_infinity(const InputDistribution& q, std::span<const double> z) {
  const std::size_t nx = q.size();
  require(z.size() == nx * nx, "r_infinity: Bhattacharyya matrix size mismatch");
  double missing = 0.0;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < nx; ++b)
      if (z[a * nx + b] <= 0.0) missing += q[a] * q[b];
  if (missing <= 0.0) return 0.0;
  return std::max(0.0, -0.5 * std::log1p(-missing));
}

namespace {

struct PairLogs {
  std::size_t nx;
  std::vector<double> q;
  std::vector<double> l;  // log Z, flattened
  bool finite = true;
};

PairLogs pair_logs(const Dmc& dmc, const InputDistribution& q) {
  check_match(dmc, q);
  const auto z = bhattacharyya_matrix(dmc);
  PairLogs p{q.size(), std::vector<double>(q.values().begin(), q.values().end()), std::vector<double>(z.size())};
  for (std::size_t a = 0; a < p.nx; ++a)
    for (std::size_t b = 0; b < p.nx; ++b) {
      const double zz = z[a * p.nx + b];
      if (zz <= 0.0 && q[a] * q[b] > 0.0) p.finite = false;
      p.l[a * p.nx + b] = zz > 0.0 ? std::log(zz) : 0.0;
    }
  return p;
}

} // namespace

NuMoments nu_moments(const Dmc& dmc, const InputDistribution& q) {
  const auto p = pair_logs(dmc, q);
  NuMoments m;
  if (!p.finite) return NuMoments{inf, inf, false};
  double mean = 0.0;
  for (std::size_t a = 0; a < p.nx; ++a)
    for (std::size_t b = 0; b < p.nx; ++b) mean += p.q[a] * p.q[b] * p.l[a * p.nx + b];
  double var = 0.0;
  for (std::size_t a = 0; a < p.nx; ++a)
    for (std::size_t b = 0; b < p.nx; ++b) {
      const double d = p.l[a * p.nx + b] - mean;
      var += p.q[a] * p.q[b] * d * d;
    }
  m.nu0 = -mean;
  m.nu1 = 0.5 * var;
  return m;
}

NuMoments nu_moments(const Dmc& dmc, const EnsembleSpec& spec) {
  auto m = nu_moments(dmc, spec.q);
  if (!m.finite || spec.kind == EnsembleKind::iid) return m;
  const auto p = pair_logs(dmc, spec.q);
  const std::size_t nx = p.nx;
  if (spec.kind == EnsembleKind::constant_composition) {
    // min over a of E_x Var_{x'}[log Z(x,x') + a(x')] is attained at
    // a = -E_x log Z(x, .), leaving E_x Var_{x'} - Var_{x'} E_x.
    double within = 0.0;
    for (std::size_t a = 0; a < nx; ++a) {
      if (p.q[a] <= 0.0) continue;
      double mu = 0.0, sq = 0.0;
      for (std::size_t b = 0; b < nx; ++b) mu += p.q[b] * p.l[a * nx + b];
      for (std::size_t b = 0; b < nx; ++b) sq += p.q[b] * (p.l[a * nx + b] - mu) * (p.l[a * nx + b] - mu);
      within += p.q[a] * sq;
    }
    std::vector<double> col(nx, 0.0);
    double grand = 0.0;
    for (std::size_t b = 0; b < nx; ++b) {
      for (std::size_t a = 0; a < nx; ++a) col[b] += p.q[a] * p.l[a * nx + b];
      grand += p.q[b] * col[b];
    }
    double between = 0.0;
    for (std::size_t b = 0; b < nx; ++b) between += p.q[b] * (col[b] - grand) * (col[b] - grand);
    m.nu1 = std::max(0.0, 0.5 * (within - between));
    return m;
  }
  // Cost-constrained: residual variance of log Z after regressing on the
  // centred costs of both codewords.
  const auto b = centred_costs(spec.q, spec.costs);
  const std::size_t nl = spec.costs.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * nl, 2 * nl);
  Eigen::VectorXd k = Eigen::VectorXd::Zero(2 * nl);
  const double mean = -m.nu0;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t x2 = 0; x2 < nx; ++x2) {
      const double w = p.q[x] * p.q[x2];
      if (w <= 0.0) continue;
      Eigen::VectorXd f(2 * nl);
      for (std::size_t l = 0; l < nl; ++l) {
        f[l] = b[l * nx + x];
        f[nl + l] = b[l * nx + x2];
      }
      cov += w * f * f.transpose();
      k += w * (p.l[x * nx + x2] - mean) * f;
    }
  const Eigen::VectorXd coef = cov.completeOrthogonalDecomposition().solve(k);
  m.nu1 = std::max(0.0, m.nu1 - 0.5 * k.dot(coef));
  return m;
}

double lambda_hat_growth(double nu1, double m, double gamma, std::size_t n) {
  require(n >= 1, "lambda_hat_growth: n must be positive");
  require(nu1 >= 0.0, "lambda_hat_growth: nu1 must be nonnegative");
  require(m >= 1.0 && gamma > 0.0, "lambda_hat_growth: need M >= 1 and gamma > 0");
  const double denom = (2.0 * std::log(m) + std::log(gamma)) / static_cast<double>(n);
  if (!(denom > 0.0)) throw DomainError("lambda_hat_growth: denominator 2 log M + log gamma is not positive");
  return std::sqrt(nu1 / denom);
}

// ---------------------------------------------------------------------------
// Ensemble dispatch and the TRC bound

double ex_for(const Dmc& dmc, const EnsembleSpec& spec, double lambda) {
  switch (spec.kind) {
  case EnsembleKind::iid: return ex_iid(dmc, spec.q, lambda);
  case EnsembleKind::constant_composition: return ex_cc(dmc, spec.q, lambda);
  case EnsembleKind::cost_constrained: return ex_cost(dmc, spec.q, lambda, spec.costs);
  }
  throw DomainError("unknown ensemble kind");
}

double e0_for(const Dmc& dmc, const EnsembleSpec& spec, double rho) {
  if (spec.kind == EnsembleKind::cost_constrained) return e0_cost(dmc, spec.q, rho, spec.costs);
  return gallager_e0(dmc, spec.q, rho);
}

CriticalRates critical_rates(const Dmc& dmc, const EnsembleSpec& spec) {
  if (spec.kind != EnsembleKind::cost_constrained) return critical_rates(dmc, spec.q);
  // Envelope theorem: derivative of the objective at the optimal tilt.
  const auto c = make_cost_e0(dmc, spec.q, 1.0, spec.costs);
  const auto best = e0_cost_detailed(dmc, spec.q, 1.0, spec.costs);
  CriticalRates r;
  r.r_cr = std::max(0.0, c.rho_derivative(best.tilt));
  r.r_star = 0.5 * r.r_cr;
  return r;
}

ExponentResult expurgated_branch(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon) {
  require(rate >= 0.0, "expurgated_branch: rate must be nonnegative");
  spec.validate();
  check_match(dmc, spec.q);
  const double iota = horizon.iota();
  const double slope = 2.0 * rate + iota;
  auto g = [&](double lambda) { return ex_for(dmc, spec, lambda) - lambda * slope; };
  const auto rep = maximize_unbounded(g, 1.0, default_tolerance, lambda_cap);
  ExponentResult r;
  r.branch = Branch::expurgated_2r;
  r.optimizer = rep.argmax;
  r.value = rep.value + rate;
  r.diagnostics.iterations = rep.iterations;
  r.diagnostics.tolerance = rep.bracket_width;
  r.diagnostics.penalty = rep.argmax * iota;
  if (!rep.converged) {
    r.diagnostics.unbounded_lambda = true;
    if (slope == 0.0) {
      const auto nu = nu_moments(dmc, spec);
      r.value = nu.finite ? nu.nu0 : inf;
    } else {
      const double half = 0.5 * lambda_cap;
      if ((rep.value - g(half)) / half > 1e-12) r.value = inf;
    }
  }
  return r;
}

ExponentResult random_coding_branch(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon) {
  require(rate >= 0.0, "random_coding_branch: rate must be nonnegative");
  spec.validate();
  check_match(dmc, spec.q);
  const double iota = horizon.iota();
  const auto rep = maximize_concave_1d([&](double rho) { return e0_for(dmc, spec, rho) - rho * rate; }, 0.0, 1.0);
  ExponentResult r;
  r.branch = Branch::random_coding;
  r.optimizer = rep.argmax;
  r.value = rep.value - iota;
  r.diagnostics.iterations = rep.iterations;
  r.diagnostics.tolerance = rep.bracket_width;
  r.diagnostics.penalty = iota;
  return r;
}

Branch select_branch(double expurgated, double random_coding, double rate, double r_star) {
  const double scale = std::max({1.0, std::abs(expurgated), std::abs(random_coding)});
  if (std::isfinite(expurgated) && std::abs(expurgated - random_coding) <= 1e-12 * scale)
    return rate <= r_star ? Branch::expurgated_2r : Branch::random_coding;
  return expurgated > random_coding ? Branch::expurgated_2r : Branch::random_coding;
}

TrcBound trc_lower_bound(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon,
                         const CriticalRates& crit) {
  TrcBound b;
  b.expurgated = expurgated_branch(dmc, spec, rate, horizon);
  b.random_coding = random_coding_branch(dmc, spec, rate, horizon);
  b.branch = select_branch(b.expurgated.value, b.random_coding.value, rate, crit.r_star);
  b.value = b.branch == Branch::expurgated_2r ? b.expurgated.value : b.random_coding.value;
  return b;
}

TrcBound trc_lower_bound(const Dmc& dmc, const EnsembleSpec& spec, double rate, const Horizon& horizon) {
  return trc_lower_bound(dmc, spec, rate, horizon, critical_rates(dmc, spec));
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  require(count >= 2 && hi > lo, "rate grid needs count >= 2 and hi > lo");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.back() = hi;
  return g;
}

ExponentCurve exponent_curve(const Dmc& dmc, const EnsembleSpec& spec, std::span<const double> rates,
                             const Horizon& horizon) {
  for (std::size_t i = 0; i < rates.size(); ++i) {
    require(rates[i] >= 0.0, "rate grid must be nonnegative");
    require(i == 0 || rates[i] > rates[i - 1], "rate grid must be strictly increasing");
  }
  ExponentCurve c;
  c.critical = critical_rates(dmc, spec);
  c.points.resize(rates.size());
  parallel_for(rates.size(), [&](std::size_t i) {
    const auto b = trc_lower_bound(dmc, spec, rates[i], horizon, c.critical);
    RatePoint& p = c.points[i];
    p.rate = rates[i];
    p.random_coding = b.random_coding.value;
    p.expurgated_plus_r = b.expurgated.value;
    p.trc_lb = b.value;
    p.lambda_hat = b.expurgated.optimizer;
    p.rho_hat = b.random_coding.optimizer;
    p.branch = b.branch;
    p.lambda_unbounded = b.expurgated.diagnostics.unbounded_lambda;
  });
  return c;
}

} // namespace trc
