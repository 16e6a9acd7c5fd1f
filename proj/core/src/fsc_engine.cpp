#include "trc/fsc_engine.hpp"

#include "trc/errors.hpp"
#include "trc/numeric.hpp"
#include "trc/optimizer.hpp"
#include "trc/parallel.hpp"
#include "trc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <limits>
#include <sstream>

namespace trc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

void check_match(const Fsc& fsc, const InputDistribution& q) {
  require(fsc.input_size() == q.size(), "input distribution size does not match the channel");
}

void require_state_revealing(const Fsc& fsc) {
  if (!fsc.state_revealing())
    throw DomainError("operation needs a state-revealing channel (new state determined by output and old state)");
}

// Writes the base-k digits of index into seq, most significant first.
void decode(std::size_t index, std::size_t k, std::span<Symbol> seq) {
  for (std::size_t t = seq.size(); t-- > 0;) {
    seq[t] = index % k;
    index /= k;
  }
}

std::size_t guarded_size(std::size_t nx, std::size_t ny, std::size_t n, std::size_t x_copies, std::size_t budget,
                         const char* what) {
  const std::size_t xs = checked_pow(nx, n * x_copies, budget);
  const std::size_t ys = checked_pow(ny, n, budget);
  if (xs == 0 || ys == 0 || xs > budget / ys) {
    std::ostringstream os;
    os << what << ": enumeration over " << x_copies << " input and one output sequence of length " << n
       << " exceeds the budget " << budget;
    throw CapacityError(os.str());
  }
  return checked_pow(nx, n, budget);
}

// W^n(. | x, s0) for every input sequence x, flattened [(x_index * A + s0) * |Y|^n + y].
struct LikelihoodTable {
  std::size_t num_inputs = 0;
  std::size_t num_outputs = 0;
  std::size_t num_states = 0;
  std::vector<double> w;
  std::vector<double> qn;

  std::span<const double> row(std::size_t i, std::size_t s0) const {
    return {w.data() + (i * num_states + s0) * num_outputs, num_outputs};
  }
};

LikelihoodTable likelihoods(const Fsc& fsc, const InputDistribution& q, std::size_t n) {
  LikelihoodTable t;
  t.num_inputs = checked_pow(fsc.input_size(), n, std::numeric_limits<std::size_t>::max());
  t.num_outputs = checked_pow(fsc.output_size(), n, std::numeric_limits<std::size_t>::max());
  t.num_states = fsc.num_states();
  t.w.resize(t.num_inputs * t.num_states * t.num_outputs);
  t.qn.resize(t.num_inputs);
  std::vector<Symbol> x(n);
  for (std::size_t i = 0; i < t.num_inputs; ++i) {
    decode(i, fsc.input_size(), x);
    double p = 1.0;
    for (Symbol s : x) p *= q[s];
    t.qn[i] = p;
    for (std::size_t s0 = 0; s0 < t.num_states; ++s0) {
      const auto m = fsc_joint_output(fsc, x, s0, t.num_outputs).marginal();
      std::copy(m.begin(), m.end(), t.w.begin() + static_cast<std::ptrdiff_t>((i * t.num_states + s0) * t.num_outputs));
    }
  }
  return t;
}

double fx_from_pairs(const LikelihoodTable& t, double lambda, std::size_t n,
                     const std::function<double(std::size_t, std::size_t)>& z) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.num_inputs; ++i) {
    if (t.qn[i] <= 0.0) continue;
    for (std::size_t j = 0; j < t.num_inputs; ++j) {
      if (t.qn[j] <= 0.0) continue;
      total += t.qn[i] * t.qn[j] * safe_pow(z(i, j), 1.0 / lambda);
    }
  }
  return -(lambda / static_cast<double>(n)) * std::log(total);
}

Eigen::MatrixXd state_known_matrix(const Fsc& fsc, const InputDistribution& q, double rho) {
  check_match(fsc, q);
  require_state_revealing(fsc);
  require(rho >= 0.0, "rho must be nonnegative");
  const std::size_t ns = fsc.num_states();
  const double s = 1.0 / (1.0 + rho);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
  for (std::size_t sp = 0; sp < ns; ++sp)
    for (std::size_t sn = 0; sn < ns; ++sn) {
      double acc = 0.0;
      for (Symbol y = 0; y < fsc.output_size(); ++y) {
        double u = 0.0;
        for (Symbol x = 0; x < fsc.input_size(); ++x)
          if (q[x] > 0.0) u += q[x] * safe_pow(fsc(sp, x, y, sn), s);
        acc += safe_pow(u, 1.0 + rho);
      }
      m(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(sn)) = acc;
    }
  return m;
}

} // namespace

BhattMatrixSet::BhattMatrixSet(std::size_t num_states, std::size_t input_size, std::vector<double> beta)
    : ns_(num_states), nx_(input_size), beta_(std::move(beta)) {
  require(beta_.size() == nx_ * nx_ * ns_ * ns_, "BhattMatrixSet: size mismatch");
}

BhattMatrixSet build_bhatt_matrices(const Fsc& fsc) {
  const std::size_t ns = fsc.num_states(), nx = fsc.input_size(), ny = fsc.output_size();
  std::vector<double> beta(nx * nx * ns * ns, 0.0);
  for (Symbol x = 0; x < nx; ++x)
    for (Symbol x2 = 0; x2 < nx; ++x2)
      for (std::size_t sn = 0; sn < ns; ++sn)
        for (std::size_t sp = 0; sp < ns; ++sp) {
          double acc = 0.0;
          for (Symbol y = 0; y < ny; ++y) acc += std::sqrt(fsc(sp, x, y, sn) * fsc(sp, x2, y, sn));
          beta[((x * nx + x2) * ns + sn) * ns + sp] = acc;
        }
  return BhattMatrixSet(ns, nx, std::move(beta));
}

namespace {

std::vector<double> start_vector(std::size_t ns, const StartState& start) {
  if (start.s0) {
    require(*start.s0 < ns, "initial state out of range");
    std::vector<double> v(ns, 0.0);
    v[*start.s0] = 1.0;
    return v;
  }
  return std::vector<double>(ns, 1.0 / static_cast<double>(ns));
}

void check_pair(const BhattMatrixSet& b, std::span<const Symbol> x, std::span<const Symbol> x2) {
  require(x.size() == x2.size(), "chain: sequences differ in length");
  for (std::size_t t = 0; t < x.size(); ++t)
    require(x[t] < b.input_size() && x2[t] < b.input_size(), "chain: symbol out of range");
}

// One channel use: w = A_{x,x2} v.
inline void apply(const BhattMatrixSet& b, Symbol x, Symbol x2, const double* v, double* w) {
  const std::size_t ns = b.num_states();
  const auto m = b.matrix(x, x2);
  for (std::size_t sn = 0; sn < ns; ++sn) {
    double acc = 0.0;
    for (std::size_t sp = 0; sp < ns; ++sp) acc += m[sn * ns + sp] * v[sp];
    w[sn] = acc;
  }
}

// Rescales v by a power of two near its largest entry; returns the exponent
// removed, or INT_MIN when v vanished.
inline int rescale(double* v, std::size_t ns) {
  double m = 0.0;
  for (std::size_t s = 0; s < ns; ++s) m = std::max(m, v[s]);
  if (m == 0.0) return std::numeric_limits<int>::min();
  int e = 0;
  std::frexp(m, &e);
  for (std::size_t s = 0; s < ns; ++s) v[s] = std::ldexp(v[s], -e);
  return e;
}

} // namespace

double log_chain(const BhattMatrixSet& b, std::span<const Symbol> x, std::span<const Symbol> x2,
                 const StartState& start) {
  check_pair(b, x, x2);
  const std::size_t ns = b.num_states();
  auto v = start_vector(ns, start);
  std::vector<double> w(ns);
  long long exponent = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    apply(b, x[t], x2[t], v.data(), w.data());
    const int e = rescale(w.data(), ns);
    if (e == std::numeric_limits<int>::min()) return -inf;
    exponent += e;
    std::swap(v, w);
  }
  double total = 0.0;
  for (double e : v) total += e;
  return static_cast<double>(exponent) * std::numbers::ln2 + std::log(total);
}

double linear_chain(const BhattMatrixSet& b, std::span<const Symbol> x, std::span<const Symbol> x2,
                    const StartState& start) {
  check_pair(b, x, x2);
  const std::size_t ns = b.num_states();
  auto v = start_vector(ns, start);
  std::vector<double> w(ns);
  for (std::size_t t = 0; t < x.size(); ++t) {
    apply(b, x[t], x2[t], v.data(), w.data());
    std::swap(v, w);
  }
  double total = 0.0;
  for (double e : v) total += e;
  return total;
}

double fx_n_exact(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t n, std::size_t budget) {
  check_match(fsc, q);
  require(lambda >= 1.0, "fx_n_exact: lambda must be at least 1");
  require(n >= 1, "fx_n_exact: n must be positive");
  guarded_size(fsc.input_size(), fsc.output_size(), n, 2, budget, "fx_n_exact");
  const auto t = likelihoods(fsc, q, n);
  std::vector<double> root(t.num_inputs * t.num_outputs, 0.0);
  for (std::size_t i = 0; i < t.num_inputs; ++i)
    for (std::size_t y = 0; y < t.num_outputs; ++y) {
      double s = 0.0;
      for (std::size_t s0 = 0; s0 < t.num_states; ++s0) s += t.row(i, s0)[y];
      root[i * t.num_outputs + y] = std::sqrt(s);
    }
  return fx_from_pairs(t, lambda, n, [&](std::size_t i, std::size_t j) {
    double z = 0.0;
    for (std::size_t y = 0; y < t.num_outputs; ++y) z += root[i * t.num_outputs + y] * root[j * t.num_outputs + y];
    return z;
  });
}

double fx_n_state_known(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t n,
                        const StartState& start, std::size_t budget) {
  check_match(fsc, q);
  require(lambda >= 1.0, "fx_n_state_known: lambda must be at least 1");
  require(n >= 1, "fx_n_state_known: n must be positive");
  guarded_size(fsc.input_size(), fsc.output_size(), n, 2, budget, "fx_n_state_known");
  const auto t = likelihoods(fsc, q, n);
  const auto weights = start_vector(t.num_states, start);
  std::vector<double> root(t.w.size());
  std::transform(t.w.begin(), t.w.end(), root.begin(), [](double v) { return std::sqrt(v); });
  return fx_from_pairs(t, lambda, n, [&](std::size_t i, std::size_t j) {
    double z = 0.0;
    for (std::size_t s0 = 0; s0 < t.num_states; ++s0) {
      if (weights[s0] == 0.0) continue;
      const double* a = root.data() + (i * t.num_states + s0) * t.num_outputs;
      const double* b = root.data() + (j * t.num_states + s0) * t.num_outputs;
      double acc = 0.0;
      for (std::size_t y = 0; y < t.num_outputs; ++y) acc += a[y] * b[y];
      z += weights[s0] * acc;
    }
    return z;
  });
}

double f0_n(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t s0,
            std::size_t budget) {
  check_match(fsc, q);
  require(rho >= 0.0, "f0_n: rho must be nonnegative");
  require(n >= 1, "f0_n: n must be positive");
  require(s0 < fsc.num_states(), "f0_n: initial state out of range");
  guarded_size(fsc.input_size(), fsc.output_size(), n, 1, budget, "f0_n");
  if (rho == 0.0) return 0.0;
  const auto t = likelihoods(fsc, q, n);
  const double s = 1.0 / (1.0 + rho);
  double total = 0.0;
  for (std::size_t y = 0; y < t.num_outputs; ++y) {
    double u = 0.0;
    for (std::size_t i = 0; i < t.num_inputs; ++i)
      if (t.qn[i] > 0.0) u += t.qn[i] * safe_pow(t.row(i, s0)[y], s);
    total += safe_pow(u, 1.0 + rho);
  }
  return -std::log(total) / static_cast<double>(n);
}

double f0_n_min(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t budget) {
  double m = inf;
  for (std::size_t s0 = 0; s0 < fsc.num_states(); ++s0) m = std::min(m, f0_n(fsc, q, rho, n, s0, budget));
  return m;
}

double f0_n_gallager(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t budget) {
  return f0_n_min(fsc, q, rho, n, budget) -
         rho * std::log(static_cast<double>(fsc.num_states())) / static_cast<double>(n);
}

double state_known_e0_n(const Fsc& fsc, const InputDistribution& q, double rho, std::size_t n, std::size_t s0) {
  require(n >= 1, "state_known_e0_n: n must be positive");
  require(s0 < fsc.num_states(), "state_known_e0_n: initial state out of range");
  if (rho == 0.0) return 0.0;
  const auto m = state_known_matrix(fsc, q, rho);
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(m.rows());
  v(static_cast<Eigen::Index>(s0)) = 1.0;
  double log_scale = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    v = v * m;
    const double mx = v.maxCoeff();
    if (mx <= 0.0) return inf;
    v /= mx;
    log_scale += std::log(mx);
  }
  return -(log_scale + std::log(v.sum())) / static_cast<double>(n);
}

double state_known_e0_limit(const Fsc& fsc, const InputDistribution& q, double rho) {
  if (rho == 0.0) return 0.0;
  const auto m = state_known_matrix(fsc, q, rho);
  const Eigen::VectorXcd ev = m.eigenvalues();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev[i]));
  if (radius <= 0.0) return inf;
  return -std::log(radius);
}

McSamples sample_log_chains(const Fsc& fsc, const InputDistribution& q, std::size_t n, std::size_t iterations,
                            std::uint64_t seed, const StartState& start, unsigned threads) {
  check_match(fsc, q);
  require(n >= 1, "fx_n_monte_carlo: n must be positive");
  require(iterations >= 1, "fx_n_monte_carlo: iterations must be positive");
  require_state_revealing(fsc);
  const auto b = build_bhatt_matrices(fsc);
  const auto cdf = q.cdf();
  const std::size_t ns = fsc.num_states();
  const auto v0 = start_vector(ns, start);
  McSamples out{seed, n, std::vector<double>(iterations)};

  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (iterations + chunk - 1) / chunk;
  parallel_for(
      chunks,
      [&](std::size_t c) {
        std::vector<double> v(ns), w(ns);
        const std::size_t end = std::min(iterations, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
          Stream rng(seed, i);
          std::copy(v0.begin(), v0.end(), v.begin());
          long long exponent = 0;
          bool zero = false;
          for (std::size_t t = 0; t < n; ++t) {
            const Symbol x = rng.categorical(cdf);
            const Symbol x2 = rng.categorical(cdf);
            apply(b, x, x2, v.data(), w.data());
            const int e = rescale(w.data(), ns);
            if (e == std::numeric_limits<int>::min()) {
              zero = true;
              break;
            }
            exponent += e;
            std::swap(v, w);
          }
          if (zero) {
            out.log_chain[i] = -inf;
            continue;
          }
          double total = 0.0;
          for (double e : v) total += e;
          out.log_chain[i] = static_cast<double>(exponent) * std::numbers::ln2 + std::log(total);
        }
      },
      threads);
  return out;
}

McPoint estimate_at(const McSamples& samples, double lambda) {
  require(lambda >= 1.0, "estimate_at: lambda must be at least 1");
  require(!samples.log_chain.empty(), "estimate_at: no samples");
  McPoint p;
  p.lambda = lambda;
  double shift = -inf;
  for (double l : samples.log_chain) shift = std::max(shift, l / lambda);
  const double nn = static_cast<double>(samples.n);
  if (shift == -inf) {
    p.log_mean = -inf;
    p.fx = inf;
    return p;
  }
  std::vector<double> terms(samples.log_chain.size());
  std::transform(samples.log_chain.begin(), samples.log_chain.end(), terms.begin(),
                 [&](double l) { return std::exp(l / lambda - shift); });
  const auto mv = mean_variance(terms);
  const double rel = std::sqrt(mv.variance / static_cast<double>(mv.count)) / mv.mean;
  p.log_mean = shift + std::log(mv.mean);
  p.mean = std::exp(p.log_mean);
  p.rel_stderr = rel;
  p.stderr_mean = p.mean * rel;
  p.fx = -(lambda / nn) * p.log_mean;
  p.fx_stderr = (lambda / nn) * rel;
  return p;
}

McEstimate fx_n_monte_carlo(const Fsc& fsc, const InputDistribution& q, std::span<const double> lambda_grid,
                            std::size_t n, std::size_t iterations, std::uint64_t seed, const StartState& start,
                            unsigned threads) {
  require(!lambda_grid.empty(), "fx_n_monte_carlo: empty lambda grid");
  const auto samples = sample_log_chains(fsc, q, n, iterations, seed, start, threads);
  McEstimate est{seed, iterations, n, {}};
  est.table.reserve(lambda_grid.size());
  for (double l : lambda_grid) est.table.push_back(estimate_at(samples, l));
  return est;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (double l = 1.0; l <= 64.0 * (1 + 1e-12); l *= 1.02) g.push_back(l);
  for (double l = g.back() * 1.25; l <= 1e4 * (1 + 1e-12); l *= 1.25) g.push_back(l);
  return g;
}

std::vector<double> coarse_lambda_grid() {
  std::vector<double> g;
  for (double l = 1.0; l <= 64.0 * (1 + 1e-12); l *= 1.25) g.push_back(l);
  return g;
}

FscCurve trc_curve_fsc(const Fsc& fsc, const InputDistribution& q, std::span<const double> rates, std::size_t n,
                       std::size_t iterations, std::uint64_t seed, const FscCurveOptions& options) {
  check_match(fsc, q);
  require_state_revealing(fsc);
  require(!options.lambda_grid.empty(), "trc_curve_fsc: empty lambda grid");
  for (double l : options.lambda_grid) require(l >= 1.0, "trc_curve_fsc: lambda grid entries must be >= 1");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    require(rates[i] >= 0.0, "trc_curve_fsc: rates must be nonnegative");
    require(i == 0 || rates[i] > rates[i - 1], "trc_curve_fsc: rate grid must be strictly increasing");
  }
  if (options.reference) require(options.reference->input_size() == q.size(), "reference channel input size mismatch");

  FscCurve curve;
  curve.estimate =
      fx_n_monte_carlo(fsc, q, options.lambda_grid, n, iterations, seed, options.start, options.threads);
  const auto e0 = [&](double rho) { return state_known_e0_limit(fsc, q, rho); };
  constexpr double h = 1e-5;
  curve.critical.r_cr = std::max(0.0, (e0(1.0 + h) - e0(1.0 - h)) / (2.0 * h));
  curve.critical.r_star = 0.5 * curve.critical.r_cr;

  std::optional<CriticalRates> ref_crit;
  const auto ref_spec = EnsembleSpec::iid(q);
  if (options.reference) ref_crit = critical_rates(*options.reference, q);

  const double iota = options.horizon.iota();
  curve.points.resize(rates.size());
  parallel_for(
      rates.size(),
      [&](std::size_t i) {
        const double r = rates[i];
        FscRatePoint& p = curve.points[i];
        p.rate = r;
        const McPoint* best = nullptr;
        double best_val = -inf;
        for (const auto& pt : curve.estimate.table) {
          const double v = pt.fx - pt.lambda * (2.0 * r + iota);
          if (v > best_val || (v == best_val && best && pt.lambda < best->lambda)) {
            best_val = v;
            best = &pt;
          }
        }
        p.expurgated = best_val + r;
        p.lambda_hat = best->lambda;
        p.mc_stderr = best->fx_stderr;
        const auto rc = maximize_concave_1d([&](double rho) { return e0(rho) - rho * r; }, 0.0, 1.0);
        p.random_coding = rc.value - iota;
        p.rho_hat = rc.argmax;
        p.branch = select_branch(p.expurgated, p.random_coding, r, curve.critical.r_star);
        p.fsc_trc_lb = p.branch == Branch::expurgated_2r ? p.expurgated : p.random_coding;
        p.dmc_reference = options.reference
                              ? trc_lower_bound(*options.reference, ref_spec, r, options.horizon, *ref_crit).value
                              : std::numeric_limits<double>::quiet_NaN();
      },
      options.threads);
  return curve;
}

Lemma2Result lemma2_check(const Fsc& fsc, const InputDistribution& q, double lambda, std::size_t k, std::size_t l) {
  require(k >= 1 && l >= 1, "lemma2_check: k and l must be positive");
  const std::size_t n = k + l;
  Lemma2Result r;
  r.lhs = fx_n_exact(fsc, q, lambda, n);
  const double nn = static_cast<double>(n);
  r.rhs = static_cast<double>(k) / nn * fx_n_exact(fsc, q, lambda, k) +
          static_cast<double>(l) / nn * fx_n_exact(fsc, q, lambda, l);
  r.holds = r.lhs >= r.rhs - 1e-12;
  return r;
}

Lemma4Result lemma4_check(const Fsc& fsc, const InputDistribution& q, std::size_t n) {
  Lemma4Result r;
  r.fx1 = fx_n_exact(fsc, q, 1.0, n);
  r.f0_1 = f0_n_gallager(fsc, q, 1.0, n);
  const double w = std::log(static_cast<double>(fsc.num_states())) / static_cast<double>(n);
  r.lower_slack = r.fx1 - (r.f0_1 - w);
  r.upper_slack = (r.f0_1 + w) - r.fx1;
  r.bound_ok = r.lower_slack >= -1e-12 && r.upper_slack >= -1e-12;
  return r;
}

} // namespace trc
