#include "trc/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  trc::cli::GlobalOptions opt;
  CLI::App app{"Typical random-coding exponent curves and experiments", "trc-curves"};
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--config", opt.config, "INI config file with one section per subcommand");
  app.add_option("--seed", opt.seed, "Override the config seed");
  app.add_option("--out", opt.out, "Output CSV path (default: stdout)");
  app.add_flag("--bits", opt.bits, "Report rates and exponents in bits");
  app.add_flag("--verbose", opt.verbose, "Progress and per-check slack on stderr");

  auto* dmc = app.add_subcommand("dmc-curve", "TRC lower bound for a memoryless channel");
  dmc->add_flag("--q-sweep", opt.q_sweep, "Maximize over Bernoulli inputs (step 0.01)");
  auto* fsc = app.add_subcommand("fsc-curve", "Monte Carlo TRC curve for a finite-state channel");
  fsc->add_flag("--reference-dmc", opt.reference_dmc, "Add the memoryless reference curve");
  auto* conc = app.add_subcommand("concentration", "Tail experiment over sampled codebooks");
  auto* check = app.add_subcommand("check", "Fast self-tests of the exponent identities");
  check->add_option("--channel", opt.channel, "Also check this channel file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : trc::cli::exit_config;
  }

  if (dmc->parsed()) return trc::cli::cmd_dmc_curve(opt, std::cerr);
  if (fsc->parsed()) return trc::cli::cmd_fsc_curve(opt, std::cerr);
  if (conc->parsed()) return trc::cli::cmd_concentration(opt, std::cerr);
  return trc::cli::cmd_check(opt, std::cout, std::cerr);
}
