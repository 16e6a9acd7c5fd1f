#include "trc/cli/commands.hpp"

#include "trc/errors.hpp"
#include "trc/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#ifndef TRC_VERSION
#define TRC_VERSION "unknown"
#endif

namespace trc::cli {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double to_units(double nats, Units u) { return u == Units::bits ? nats / std::numbers::ln2 : nats; }

std::string schedule_text(const Horizon& h) { return h.is_asymptotic() ? "none" : h.schedule().describe(); }

void header(std::ostream& out, const char* command, std::uint64_t seed, const std::string& mode,
            const std::string& schedule, Units units) {
  out << "# trc-curves " << TRC_VERSION << " command=" << command << " seed=" << seed << " mode=" << mode
      << " schedule=" << schedule << " units=" << to_string(units) << "\n";
}

// Buffers the whole document so that a failed run leaves no partial file.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open output file '" + path + "'");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing output file '" + path + "'");
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Random test inputs for the self-checks, drawn from the library's own streams.
std::vector<double> random_simplex(Stream& rng, std::size_t k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) s += (x = -std::log(1.0 - rng.uniform()));
  for (auto& x : v) x /= s;
  return v;
}

Dmc random_dmc(Stream& rng, std::size_t nx, std::size_t ny) {
  std::vector<double> w;
  for (std::size_t x = 0; x < nx; ++x) {
    const auto r = random_simplex(rng, ny);
    w.insert(w.end(), r.begin(), r.end());
  }
  return Dmc(nx, ny, w);
}

Fsc random_two_state(Stream& rng) {
  std::vector<double> k;
  for (std::size_t row = 0; row < 4; ++row) {
    const auto r = random_simplex(rng, 4);
    k.insert(k.end(), r.begin(), r.end());
  }
  return Fsc(2, 2, 2, k);
}

} // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_dmc_curve(std::ostream& out, const DmcCurveConfig& c) {
  const auto rates = c.rates.values();
  const auto& h = c.horizon;
  header(out, "dmc-curve", c.seed, h.describe(), schedule_text(h), c.units);
  out << "# ensemble=" << to_string(c.ensemble.kind) << " inputs=" << c.channel.input_size()
      << " outputs=" << c.channel.output_size() << "\n";

  if (!c.q_sweep) {
    const auto curve = exponent_curve(c.channel, c.ensemble, rates, h);
    out << "# r_cr=" << format_number(to_units(curve.critical.r_cr, c.units))
        << " r_star=" << format_number(to_units(curve.critical.r_star, c.units)) << "\n";
    out << "rate,random_coding,expurgated_plus_r,trc_lb,lambda_hat,rho_hat,branch,lambda_unbounded\n";
    for (const auto& p : curve.points)
      out << format_number(to_units(p.rate, c.units)) << ',' << format_number(to_units(p.random_coding, c.units))
          << ',' << format_number(to_units(p.expurgated_plus_r, c.units)) << ','
          << format_number(to_units(p.trc_lb, c.units)) << ',' << format_number(p.lambda_hat) << ','
          << format_number(p.rho_hat) << ',' << to_string(p.branch) << ',' << (p.lambda_unbounded ? 1 : 0) << "\n";
    return;
  }

  if (c.channel.input_size() != 2) throw ConfigError("--q-sweep needs a binary-input channel");
  std::vector<RatePoint> best(rates.size());
  std::vector<double> best_q(rates.size(), 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double q1 = k / 100.0;
    auto spec = c.ensemble;
    spec.q = InputDistribution::bernoulli(q1);
    const auto curve = exponent_curve(c.channel, spec, rates, h);
    for (std::size_t i = 0; i < rates.size(); ++i)
      if (k == 0 || curve.points[i].trc_lb > best[i].trc_lb) {
        best[i] = curve.points[i];
        best_q[i] = q1;
      }
  }
  out << "rate,random_coding,expurgated_plus_r,trc_lb,lambda_hat,rho_hat,branch,lambda_unbounded,best_q1\n";
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto& p = best[i];
    out << format_number(to_units(p.rate, c.units)) << ',' << format_number(to_units(p.random_coding, c.units))
        << ',' << format_number(to_units(p.expurgated_plus_r, c.units)) << ','
        << format_number(to_units(p.trc_lb, c.units)) << ',' << format_number(p.lambda_hat) << ','
        << format_number(p.rho_hat) << ',' << to_string(p.branch) << ',' << (p.lambda_unbounded ? 1 : 0) << ','
        << format_number(best_q[i]) << "\n";
  }
}

void write_fsc_curve(std::ostream& out, const FscCurveConfig& c) {
  const auto rates = c.rates.values();
  FscCurveOptions opt;
  opt.lambda_grid = c.lambda_grid;
  opt.start = c.start;
  opt.horizon = c.horizon;
  opt.threads = c.threads;
  if (c.emit_reference) {
    if (!c.reference) throw ConfigError("--reference-dmc needs a reference channel (reference_file)");
    opt.reference = c.reference;
  }
  const auto curve = trc_curve_fsc(c.channel, c.input, rates, c.n, c.iterations, c.seed, opt);

  header(out, "fsc-curve", c.seed, c.horizon.is_asymptotic() ? "asymptotic" : c.horizon.describe(),
         schedule_text(c.horizon), c.units);
  out << "# n=" << c.n << " iterations=" << c.iterations << " lambda_grid=" << c.lambda_grid_name
      << " start=" << (c.start.s0 ? std::to_string(*c.start.s0) : std::string("averaged")) << "\n";
  out << "# r_cr=" << format_number(to_units(curve.critical.r_cr, c.units))
      << " r_star=" << format_number(to_units(curve.critical.r_star, c.units))
      << " random_coding=limit_E0_state_known\n";
  out << "rate,fsc_trc_lb,fsc_branch,dmc_reference,lambda_hat,rho_hat,mc_stderr\n";
  for (const auto& p : curve.points)
    out << format_number(to_units(p.rate, c.units)) << ',' << format_number(to_units(p.fsc_trc_lb, c.units)) << ','
        << to_string(p.branch) << ',' << format_number(to_units(p.dmc_reference, c.units)) << ','
        << format_number(p.lambda_hat) << ',' << format_number(p.rho_hat) << ','
        << format_number(to_units(p.mc_stderr, c.units)) << "\n";
}

ViolationReport write_concentration(std::ostream& out, const ConcentrationConfig& c) {
  const auto& e = c.experiment;
  const auto run = run_concentration(e, c.threads);
  const auto& r = run.report;
  std::ostringstream gamma;
  gamma << "gamma=" << format_number(e.gamma);
  header(out, "concentration", e.seed, "finite_n(n=" + std::to_string(e.n) + ")", gamma.str(), Units::nats);
  out << "# ensemble=" << to_string(e.ensemble.kind) << " m=" << e.m << " codebooks_per_batch=" << e.codebooks
      << " s=" << format_number(e.s) << "\n";
  out << "seed_index,batch,pe,exponent\n";
  for (std::size_t i = 0; i < run.error_probs.size(); ++i) {
    const double pe = run.error_probs[i];
    const double ex = pe > 0.0 ? -std::log(pe) / static_cast<double>(e.n) : inf;
    out << i << ',' << (i < e.codebooks ? 1 : 2) << ',' << format_number(pe) << ',' << format_number(ex) << "\n";
  }
  out << "# moment=" << format_number(r.moment) << " moment_stderr=" << format_number(r.moment_stderr)
      << " threshold=" << format_number(r.threshold) << "\n";
  out << "# violations=" << r.violations << " count=" << r.count << " fraction=" << format_number(r.fraction)
      << " bound=" << format_number(r.bound) << " binomial_se=" << format_number(r.binomial_se) << "\n";
  out << "# result=" << (r.vacuous ? "vacuous" : r.holds ? "pass" : "fail") << "\n";
  return r;
}

std::vector<CheckResult> run_checks(const std::optional<ChannelDescription>& extra) {
  std::vector<CheckResult> results;
  const auto add = [&](std::string name, double slack) {
    results.push_back({std::move(name), std::isfinite(slack) && slack >= 0.0, slack});
  };
  const std::vector<double> lambdas{1.0, 1.5, 2.0, 5.0, 10.0};
  const auto derivative_slack = [&](const Dmc& d, const InputDistribution& q) {
    const auto z = bhattacharyya_matrix(d);
    double worst = inf;
    for (double l : lambdas) {
      const double h = 1e-5;
      const double fd = (ex_iid(z, q, l + h) - ex_iid(z, q, l - h)) / (2 * h);
      worst = std::min(worst, 1e-8 - std::abs(fd - ex_lambda_derivative(z, q, l)));
    }
    return worst;
  };
  const auto u2 = InputDistribution::uniform(2);

  Stream rng(20240901, 0);
  double worst = inf;
  for (int i = 0; i < 20; ++i) {
    const auto d = random_dmc(rng, 2 + rng.below(3), 2 + rng.below(3));
    worst = std::min(worst, derivative_slack(d, InputDistribution(random_simplex(rng, d.input_size()))));
  }
  add("derivative_identity", worst);

  worst = inf;
  const auto bsc2 = make_two_state_bsc_fsc(0.3, 0.1, 0.2, true);
  for (std::size_t n = 2; n <= 5; ++n) {
    const auto r = lemma4_check(bsc2, u2, n);
    worst = std::min({worst, r.lower_slack + 1e-12, r.upper_slack + 1e-12});
  }
  for (int i = 0; i < 10; ++i) {
    const auto r = lemma4_check(random_two_state(rng), InputDistribution(random_simplex(rng, 2)), 3);
    worst = std::min({worst, r.lower_slack + 1e-12, r.upper_slack + 1e-12});
  }
  add("sandwich_bound", worst);

  worst = inf;
  for (int i = 0; i < 10; ++i) {
    const auto f = random_two_state(rng);
    const InputDistribution q(random_simplex(rng, 2));
    for (double l : {1.0, 2.0})
      for (std::size_t k : {1u, 2u}) {
        const auto r = lemma2_check(f, q, l, k, 4 - k);
        worst = std::min(worst, r.lhs - r.rhs + 1e-12);
      }
  }
  add("superadditivity", worst);

  {
    const auto bsc = make_bsc(0.1);
    const Dmc toy(3, 3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6});
    const auto u3 = InputDistribution::uniform(3);
    const std::vector<CostFunction> costs{{0.0, 1.0, 2.0}};
    const std::vector<double> zero2{0.0, 0.0}, zero1{0.0};
    double w = 1e-12 - std::abs(ex_cost_objective(toy, u3, 2.0, costs, zero2) - ex_iid(toy, u3, 2.0));
    w = std::min(w, 1e-12 - std::abs(e0_cost_objective(toy, u3, 1.0, costs, zero1) - gallager_e0(toy, u3, 1.0)));
    const std::vector<double> metric(bsc.values().begin(), bsc.values().end());
    for (double rho : {0.0, 0.5, 1.0})
      w = std::min(w, 1e-12 - std::abs(mismatched_e0(bsc, metric, u2, rho, 1 / (1 + rho)) - gallager_e0(bsc, u2, rho)));
    w = std::min(w, 1e-9 - std::abs(ex_cc(bsc, u2, 2.0) - ex_cc_objective(bsc, u2, 2.0, zero2)));
    add("reduction_identities", w);
  }

  {
    const auto bsc = make_bsc(0.1);
    const auto spec = EnsembleSpec::iid(u2);
    const auto crit = critical_rates(bsc, spec);
    const auto at = trc_lower_bound(bsc, spec, crit.r_star, Horizon::asymptotic(), crit);
    add("crossover_continuity", 1e-9 - std::abs(at.expurgated.value - at.random_coding.value));
  }

  {
    const auto b = build_bhatt_matrices(bsc2);
    double w = inf;
    for (int i = 0; i < 50; ++i) {
      std::vector<Symbol> x(6), x2(6);
      for (std::size_t t = 0; t < 6; ++t) {
        x[t] = static_cast<Symbol>(rng.below(2));
        x2[t] = static_cast<Symbol>(rng.below(2));
      }
      const double lin = linear_chain(b, x, x2);
      w = std::min(w, 1e-10 - std::abs(std::exp(log_chain(b, x, x2)) - lin) / lin);
    }
    add("log_domain_chain", w);
  }

  if (extra) {
    if (const auto* d = std::get_if<Dmc>(&*extra)) {
      const auto q = InputDistribution::uniform(d->input_size());
      add("channel_derivative_identity", derivative_slack(*d, q));
      const std::vector<double> metric(d->values().begin(), d->values().end());
      double w = inf;
      for (double rho : {0.0, 0.5, 1.0})
        w = std::min(w, 1e-12 - std::abs(mismatched_e0(*d, metric, q, rho, 1 / (1 + rho)) - gallager_e0(*d, q, rho)));
      add("channel_mismatched_reduction", w);
    } else {
      const auto& f = std::get<Fsc>(*extra);
      const auto q = InputDistribution::uniform(f.input_size());
      double w = inf;
      for (std::size_t n = 1; n <= 6; ++n) {
        try {
          const auto r = lemma4_check(f, q, n);
          w = std::min({w, r.lower_slack + 1e-12, r.upper_slack + 1e-12});
        } catch (const CapacityError&) {
          break;
        }
      }
      add("channel_sandwich_bound", w);
      w = inf;
      for (std::size_t k = 1; k <= 2; ++k) {
        try {
          const auto r = lemma2_check(f, q, 1.0, k, 2);
          w = std::min(w, r.lhs - r.rhs + 1e-12);
        } catch (const CapacityError&) {
          break;
        }
      }
      add("channel_superadditivity", w);
    }
  }
  return results;
}

int guarded(const std::function<int()>& body, std::ostream& log) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const CapacityError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const IoError& e) {
    log << "io error: " << e.what() << "\n";
    return exit_io;
  } catch (const ConvergenceError& e) {
    log << "numeric error: " << e.what() << " (best value " << format_number(e.best_value()) << ")\n";
    return exit_numeric;
  } catch (const Error& e) {
    log << "numeric error: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::bad_alloc&) {
    log << "numeric error: out of memory\n";
    return exit_numeric;
  }
}

int cmd_dmc_curve(const GlobalOptions& opt, std::ostream& log) {
  return guarded([&] {
    auto c = parse_dmc_curve(load_section(opt.config, "dmc-curve"));
    if (opt.seed) c.seed = *opt.seed;
    if (opt.out) c.out = *opt.out;
    if (opt.bits) c.units = Units::bits;
    if (opt.q_sweep) c.q_sweep = true;
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream text;
    write_dmc_curve(text, c);
    emit(c.out, text.str());
    if (opt.verbose) log << "dmc-curve: " << c.rates.count << " rates in " << elapsed_seconds(t0) << " s\n";
    return exit_ok;
  }, log);
}

int cmd_fsc_curve(const GlobalOptions& opt, std::ostream& log) {
  return guarded([&] {
    auto c = parse_fsc_curve(load_section(opt.config, "fsc-curve"));
    if (opt.seed) c.seed = *opt.seed;
    if (opt.out) c.out = *opt.out;
    if (opt.bits) c.units = Units::bits;
    if (opt.reference_dmc) c.emit_reference = true;
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream text;
    write_fsc_curve(text, c);
    emit(c.out, text.str());
    if (opt.verbose)
      log << "fsc-curve: n=" << c.n << " iterations=" << c.iterations << " in " << elapsed_seconds(t0) << " s\n";
    return exit_ok;
  }, log);
}

int cmd_concentration(const GlobalOptions& opt, std::ostream& log) {
  return guarded([&] {
    auto c = parse_concentration(load_section(opt.config, "concentration"));
    if (opt.seed) c.experiment.seed = *opt.seed;
    if (opt.out) c.out = *opt.out;
    if (opt.bits) log << "note: concentration reports probabilities; --bits has no effect\n";
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream text;
    const auto r = write_concentration(text, c);
    emit(c.out, text.str());
    if (opt.verbose)
      log << "concentration: fraction=" << format_number(r.fraction) << " bound=" << format_number(r.bound)
          << " in " << elapsed_seconds(t0) << " s\n";
    return exit_ok;
  }, log);
}

int cmd_check(const GlobalOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded([&] {
    std::optional<ChannelDescription> extra;
    if (opt.channel) extra = load_channel(*opt.channel);
    const auto results = run_checks(extra);
    bool ok = true;
    for (const auto& r : results) {
      out << (r.passed ? "PASS " : "FAIL ") << r.name;
      if (opt.verbose) out << " slack=" << format_number(r.slack);
      out << "\n";
      ok = ok && r.passed;
    }
    return ok ? exit_ok : exit_check;
  }, log);
}

} // namespace trc::cli
