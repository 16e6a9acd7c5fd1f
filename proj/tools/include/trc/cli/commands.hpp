#pragma once

#include "trc/cli/config.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trc::cli {

// Flags shared by all subcommands; set ones override the config file.
struct GlobalOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool bits = false;
  bool q_sweep = false;
  bool reference_dmc = false;
  bool verbose = false;
  std::optional<std::string> channel;  // check only
};

std::string format_number(double v);

// Writers used by the commands. Output depends only on the config.
void write_dmc_curve(std::ostream& out, const DmcCurveConfig& config);
void write_fsc_curve(std::ostream& out, const FscCurveConfig& config);
// Returns the Markov-tail report written in the summary block.
ViolationReport write_concentration(std::ostream& out, const ConcentrationConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  double slack = 0.0;  // smallest margin to the tolerance; negative on failure
};
std::vector<CheckResult> run_checks(const std::optional<ChannelDescription>& extra);

int cmd_dmc_curve(const GlobalOptions& opt, std::ostream& log);
int cmd_fsc_curve(const GlobalOptions& opt, std::ostream& log);
int cmd_concentration(const GlobalOptions& opt, std::ostream& log);
int cmd_check(const GlobalOptions& opt, std::ostream& out, std::ostream& log);

// Runs body and maps library exceptions to exit codes, printing the message.
int guarded(const std::function<int()>& body, std::ostream& log);

} // namespace trc::cli
