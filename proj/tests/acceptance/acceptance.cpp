// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracles.hpp"

#include "trc/channel.hpp"
#include "trc/cli/commands.hpp"
#include "trc/concentration.hpp"
#include "trc/errors.hpp"
#include "trc/exponents.hpp"
#include "trc/fsc_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace trc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const double ln2 = std::numbers::ln2;
const InputDistribution uniform2 = InputDistribution::uniform(2);

Outcome derivative_identity() {
  oracle::Random rng(1001);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto nx = 2 + rng.index(3), ny = 2 + rng.index(3);
    const auto dmc = rng.dmc(nx, ny);
    const InputDistribution q(rng.simplex(nx));
    const auto z = bhattacharyya_matrix(dmc);
    for (double lambda : {1.0, 1.5, 2.0, 5.0, 10.0}) {
      const double fd = (ex_iid(z, q, lambda + h) - ex_iid(z, q, lambda - h)) / (2 * h);
      worst = std::max(worst, std::abs(fd - ex_lambda_derivative(dmc, q, lambda)));
    }
  }
  return {worst <= 1e-8, fmt("max |fd - derivative| = %.3g over 250 cases", worst)};
}

Outcome sandwich() {
  std::vector<Fsc> kernels{make_two_state_bsc_fsc(0.3, 0.1, 0.2, true)};
  oracle::Random rng(1002);
  for (int i = 0; i < 50; ++i) kernels.push_back(rng.two_state(i % 2 == 0));
  double worst = INFINITY;
  for (const auto& f : kernels)
    for (std::size_t n = 2; n <= 6; ++n) {
      const auto r = lemma4_check(f, uniform2, n);
      worst = std::min({worst, r.lower_slack, r.upper_slack});
    }
  return {worst >= -1e-12, fmt("min slack %.6g over 51 kernels, n = 2..6", worst)};
}

Outcome superadditivity() {
  oracle::Random rng(1003);
  double worst = INFINITY;
  for (int i = 0; i < 20; ++i) {
    const auto f = rng.two_state(i % 2 == 0);
    for (auto [k, l] : {std::pair<std::size_t, std::size_t>{1, 3}, {2, 2}})
      for (double lambda : {1.0, 2.0}) {
        const auto r = lemma2_check(f, uniform2, lambda, k, l);
        worst = std::min(worst, r.lhs - r.rhs);
      }
  }
  return {worst >= -1e-12, fmt("min lhs - rhs %.6g over 80 cases", worst)};
}

Outcome empirical_tail() {
  ExperimentConfig c{make_bsc(0.1), EnsembleSpec::iid(uniform2)};
  c.n = 6;
  c.m = 4;
  c.codebooks = 10000;
  c.seed = 1;
  const auto pe = codebook_error_probs(c, 0, 2 * c.codebooks);
  const std::span<const double> first(pe.data(), c.codebooks), second(pe.data() + c.codebooks, c.codebooks);
  bool ok = true;
  double worst = INFINITY;
  for (double s : {0.25, 0.5, 1.0})
    for (double gamma : {5.0, 20.0, 100.0}) {
      const auto r = markov_violation_rate(first, second, s, gamma);
      ok = ok && r.holds;
      worst = std::min(worst, r.bound + 4 * r.binomial_se - r.fraction);
    }
  return {ok, fmt("9 cells, smallest margin to 1/gamma + 4 SE = %.4g", worst)};
}

Outcome crossover() {
  const auto bsc = make_bsc(0.1);
  const auto spec = EnsembleSpec::iid(uniform2);
  const auto horizon = Horizon::asymptotic();
  const auto crit = critical_rates(bsc, spec);
  const double rs = crit.r_star;
  const double ex = expurgated_branch(bsc, spec, rs, horizon).value;
  const double er = random_coding_branch(bsc, spec, rs, horizon).value;
  const double gap = std::abs(ex - er);

  std::vector<double> rates;
  for (std::size_t i = 0; i * 1e-4 <= 2 * crit.r_cr; ++i) rates.push_back(i * 1e-4);
  const auto curve = exponent_curve(bsc, spec, rates, horizon);
  std::size_t mislabelled = 0, switches = 0;
  double switch_at = NAN;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (p.rate < rs && p.branch != Branch::expurgated_2r) ++mislabelled;
    if (p.rate > rs && p.branch != Branch::random_coding) ++mislabelled;
    if (i > 0 && p.branch != curve.points[i - 1].branch) {
      ++switches;
      switch_at = p.rate;
    }
  }
  const bool ok = gap <= 1e-9 && mislabelled == 0 && switches == 1 && std::abs(switch_at - rs) <= 1e-4;
  return {ok, fmt("|Eex(2R*)+R* - Er(R*)| = %.3g, R* = %.9g, switch at %.4f", gap, rs, switch_at) +
                  " mislabelled=" + std::to_string(mislabelled)};
}

Outcome reductions() {
  oracle::Random rng(1006);
  std::vector<Dmc> channels{make_bsc(0.1), Dmc(3, 3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6})};
  for (int i = 0; i < 5; ++i) channels.push_back(rng.dmc(2 + rng.index(3), 2 + rng.index(3)));
  double cost_ex = 0.0, cost_e0 = 0.0, mism = 0.0, cc = 0.0;
  for (const auto& w : channels) {
    const auto nx = w.input_size();
    const InputDistribution q(rng.simplex(nx));
    std::vector<CostFunction> costs{CostFunction(rng.simplex(nx)), CostFunction(rng.simplex(nx))};
    for (double lambda : {1.0, 2.0, 5.0}) {
      const std::vector<double> r(2 * costs.size(), 0.0);
      cost_ex = std::max(cost_ex, std::abs(ex_cost_objective(w, q, lambda, costs, r) - ex_iid(w, q, lambda)));
    }
    for (double rho : {0.0, 0.5, 1.0}) {
      const std::vector<double> r(costs.size(), 0.0);
      const double e0 = gallager_e0(w, q, rho);
      cost_e0 = std::max(cost_e0, std::abs(e0_cost_objective(w, q, rho, costs, r) - e0));
      mism = std::max(mism, std::abs(mismatched_e0(w, w.values(), q, rho, 1.0 / (1.0 + rho)) - e0));
    }
  }
  for (double p : {0.01, 0.1, 0.3})
    for (double lambda : {1.0, 2.0, 5.0}) {
      const auto bsc = make_bsc(p);
      const std::vector<double> a(2, 0.0);
      cc = std::max(cc, std::abs(ex_cc(bsc, uniform2, lambda) - ex_cc_objective(bsc, uniform2, lambda, a)));
    }
  const bool ok = cost_ex <= 1e-12 && cost_e0 <= 1e-12 && mism <= 1e-12 && cc <= 1e-9;
  std::ostringstream os;
  os.precision(3);
  os << "ex_cost " << cost_ex << ", e0_cost " << cost_e0 << ", mismatched " << mism << ", ex_cc " << cc;
  return {ok, os.str()};
}

Outcome mc_vs_exact() {
  const auto f = make_two_state_bsc_fsc(0.3, 0.1, 0.2, true);
  const std::vector<double> grid{1.0, 2.0, 4.0};
  const std::size_t n = 4;
  std::vector<double> exact;
  for (double l : grid) exact.push_back(fx_n_state_known(f, uniform2, l, n));
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto est = fx_n_monte_carlo(f, uniform2, grid, n, 1000000, seed);
    for (std::size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(est.table[i].fx - exact[i]) / est.table[i].fx_stderr);
  }
  return {worst <= 4.0, fmt("max |mc - exact| / SE = %.3f over 5 seeds x 3 lambdas", worst)};
}

std::size_t first_zero(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] <= 1e-12) return i;
  return v.size();
}

std::size_t increases(const std::vector<double>& v) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + 1e-12) ++k;
  return k;
}

Outcome curve_structure() {
  const std::size_t n = 200, iterations = 1000000;
  const auto rates = linear_grid(0.0, 0.5 * ln2, 50);
  FscCurveOptions opt;
  opt.reference = make_two_state_reference_dmc(0.01, 0.1);

  // (a) q = 1/2 collapses onto the memoryless reference.
  const auto half = trc_curve_fsc(make_two_state_bsc_fsc(0.5, 0.01, 0.1, true), uniform2, rates, n, iterations, 1, opt);
  double worst_z = 0.0;
  std::size_t outside = 0;
  for (const auto& p : half.points) {
    const double diff = std::abs(p.fsc_trc_lb - p.dmc_reference);
    const double z = p.branch == Branch::random_coding ? (diff <= 1e-9 ? 0.0 : INFINITY)
                                                       : diff / std::max(p.mc_stderr, 1e-300);
    if (diff > 1e-9 && z > 3.0) ++outside;
    worst_z = std::max(worst_z, diff <= 1e-9 ? 0.0 : z);
  }
  const bool a = outside == 0;

  // (b) zero crossings: stated grid, then a grid reaching past capacity.
  const auto fsc = make_two_state_bsc_fsc(0.01, 0.01, 0.1, true);
  const auto main = trc_curve_fsc(fsc, uniform2, rates, n, iterations, 1, opt);
  std::vector<double> lb, ref;
  for (const auto& p : main.points) {
    lb.push_back(p.fsc_trc_lb);
    ref.push_back(p.dmc_reference);
  }
  const auto z1 = first_zero(lb), z2 = first_zero(ref);
  const bool b_stated = (z1 == rates.size() && z2 == rates.size()) ||
                        (z1 < rates.size() && z2 < rates.size() && (z1 > z2 ? z1 - z2 : z2 - z1) <= 1);
  const auto wide = linear_grid(0.0, ln2, 100);
  const auto ext = trc_curve_fsc(fsc, uniform2, wide, n, iterations, 1, opt);
  std::vector<double> lb_w, ref_w;
  for (const auto& p : ext.points) {
    lb_w.push_back(p.fsc_trc_lb);
    ref_w.push_back(p.dmc_reference);
  }
  const auto w1 = first_zero(lb_w), w2 = first_zero(ref_w);
  const bool b_wide = w1 < wide.size() && w2 < wide.size() && (w1 > w2 ? w1 - w2 : w2 - w1) <= 1;
  const bool b = b_stated && b_wide;

  // (c) monotone up to MC noise.
  const auto v1 = increases(lb), v2 = increases(ref);
  const bool c = v1 <= 2 && v2 <= 2;

  std::ostringstream os;
  os.precision(6);
  os << "(a) " << (a ? "ok" : "fail") << " points outside 3 SE: " << outside << ", max z " << worst_z << "; (b) "
     << (b ? "ok" : "fail") << " stated grid zeros " << (z1 == rates.size() ? std::string("none") : std::to_string(rates[z1]))
     << "/" << (z2 == rates.size() ? std::string("none") : std::to_string(rates[z2])) << ", extended grid zeros "
     << (w1 < wide.size() ? wide[w1] : NAN) << "/" << (w2 < wide.size() ? wide[w2] : NAN) << "; (c) "
     << (c ? "ok" : "fail") << " increases " << v1 << "/" << v2;
  return {a && b && c, os.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "trc_acceptance_determinism";
  fs::create_directories(dir);
  const auto ini = dir / "run.ini";
  {
    std::ofstream out(ini);
    out << "[fsc-curve]\nchannel = two_state\nstate_flip = 0.3\np0 = 0.1\np1 = 0.2\nn = 50\n"
           "iterations = 50000\nrate_count = 20\nreference = true\n\n"
           "[concentration]\nchannel = bsc\np = 0.1\nn = 6\nm = 4\ncodebooks = 2000\ns = 0.5\ngamma = 20\n";
  }
  std::ostringstream log;
  auto run = [&](auto cmd, const std::string& name) {
    cli::GlobalOptions o;
    o.config = ini.string();
    o.seed = 7;
    o.out = (dir / name).string();
    return cmd(o, log);
  };
  int rc = 0;
  rc |= run(cli::cmd_fsc_curve, "fsc_a.csv");
  rc |= run(cli::cmd_fsc_curve, "fsc_b.csv");
  rc |= run(cli::cmd_concentration, "conc_a.csv");
  rc |= run(cli::cmd_concentration, "conc_b.csv");
  const auto fa = slurp(dir / "fsc_a.csv"), fb = slurp(dir / "fsc_b.csv");
  const auto ca = slurp(dir / "conc_a.csv"), cb = slurp(dir / "conc_b.csv");
  fs::remove_all(dir);
  const bool ok = rc == 0 && !fa.empty() && !ca.empty() && fa == fb && ca == cb;
  return {ok, "fsc-curve " + std::to_string(fa.size()) + " bytes " + (fa == fb ? "identical" : "differ") +
                  ", concentration " + std::to_string(ca.size()) + " bytes " + (ca == cb ? "identical" : "differ") +
                  (rc ? ", command error: " + log.str() : "")};
}

} // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"derivative identity", derivative_identity},
      {"sandwich bound", sandwich},
      {"superadditivity", superadditivity},
      {"empirical tail of Pe", empirical_tail},
      {"branch crossover", crossover},
      {"reduction identities", reductions},
      {"monte carlo vs exact", mc_vs_exact},
      {"two-state curve structure", curve_structure},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
