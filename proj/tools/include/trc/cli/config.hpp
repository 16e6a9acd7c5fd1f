#pragma once

#include "trc/channel.hpp"
#include "trc/concentration.hpp"
#include "trc/ensemble.hpp"
#include "trc/exponents.hpp"
#include "trc/fsc_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trc::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numeric = 2, exit_io = 3, exit_check = 4 };

enum class Units { nats, bits };
const char* to_string(Units u);

// Keys of one [section] of an INI config file. Values stay as text until a
// typed getter asks for them; every getter names the key in its error.
class Section {
public:
  Section() = default;
  Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir);

  const std::string& name() const noexcept { return name_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;

  // Throws ConfigError naming the first key not in the list.
  void allow_only(const std::vector<std::string>& keys) const;

private:
  std::string name_;
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

// Reads [name] from an INI file. No path yields an empty section (all defaults).
Section load_section(const std::optional<std::string>& path, const std::string& name);

struct RateGrid {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 50;
  std::vector<double> values() const;
};

struct DmcCurveConfig {
  Dmc channel = make_bsc(0.1);
  EnsembleSpec ensemble = EnsembleSpec::iid(InputDistribution::uniform(2));
  RateGrid rates{0.0, 0.5 * 0.6931471805599453, 50};
  Horizon horizon = Horizon::asymptotic();
  std::uint64_t seed = 1;
  Units units = Units::nats;
  bool q_sweep = false;
  std::string out;
};

struct FscCurveConfig {
  Fsc channel = make_two_state_bsc_fsc(0.01, 0.01, 0.1, true);
  InputDistribution input = InputDistribution::uniform(2);
  std::optional<Dmc> reference;  // the comparison channel, when one is known
  bool emit_reference = false;
  RateGrid rates{0.0, 0.5 * 0.6931471805599453, 50};
  std::size_t n = 200;
  std::size_t iterations = 1000000;
  std::uint64_t seed = 1;
  std::vector<double> lambda_grid = default_lambda_grid();
  std::string lambda_grid_name = "default";
  StartState start = StartState::averaged();
  Horizon horizon = Horizon::asymptotic();
  unsigned threads = 0;
  Units units = Units::nats;
  std::string out;
};

struct ConcentrationConfig {
  ExperimentConfig experiment{make_bsc(0.1), EnsembleSpec::iid(InputDistribution::uniform(2))};
  unsigned threads = 0;
  std::string out;
};

DmcCurveConfig parse_dmc_curve(const Section& s);
FscCurveConfig parse_fsc_curve(const Section& s);
ConcentrationConfig parse_concentration(const Section& s);

// Shared pieces, exposed for the check command.
ChannelDescription parse_channel_keys(const Section& s, bool state_revealing);
EnsembleSpec parse_ensemble(const Section& s, std::size_t input_size);
Horizon parse_horizon(const Section& s);

} // namespace trc::cli
