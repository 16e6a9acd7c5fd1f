#include "trc/cli/config.hpp"

#include "trc/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace trc::cli {

namespace {

[[noreturn]] void bad_value(const std::string& section, const std::string& key, const std::string& value,
                            const char* expected) {
  std::ostringstream os;
  os << "[" << section << "] " << key << " = '" << value << "': expected " << expected;
  throw ConfigError(os.str());
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_real(const std::string& section, const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    bad_value(section, key, v, "a number");
  }
  if (pos != v.size() || !std::isfinite(d)) bad_value(section, key, v, "a finite number");
  return d;
}

Units parse_units(const Section& s) {
  const auto u = s.text("units", "nats");
  if (u == "nats") return Units::nats;
  if (u == "bits") return Units::bits;
  bad_value(s.name(), "units", u, "nats or bits");
}

RateGrid parse_rates(const Section& s, Units units, RateGrid fallback) {
  // Rates in the file follow the file's units; the library works in nats.
  const double scale = units == Units::bits ? std::numbers::ln2 : 1.0;
  RateGrid g;
  g.min = s.has("rate_min") ? s.real("rate_min", 0.0) * scale : fallback.min;
  g.max = s.has("rate_max") ? s.real("rate_max", 0.0) * scale : fallback.max;
  g.count = s.count("rate_count", fallback.count);
  if (g.min < 0.0 || !(g.max > g.min) || g.count < 2)
    throw ConfigError("[" + s.name() + "] rate grid needs 0 <= rate_min < rate_max and rate_count >= 2");
  return g;
}

const std::vector<std::string> channel_keys{"channel", "p", "channel_file", "state_flip", "p0", "p1"};
const std::vector<std::string> ensemble_keys{"ensemble", "input", "costs", "delta"};
const std::vector<std::string> horizon_keys{"mode", "n", "schedule", "alpha", "gamma_table"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

} // namespace

const char* to_string(Units u) { return u == Units::bits ? "bits" : "nats"; }

Section::Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir)
    : name_(std::move(name)), values_(std::move(values)), base_dir_(std::move(base_dir)) {}

std::string Section::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Section::real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_real(name_, key, it->second);
}

std::size_t Section::count(const std::string& key, std::size_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const double d = parse_real(name_, key, it->second);
  if (d < 0.0 || d != std::floor(d) || d > 1e15) bad_value(name_, key, it->second, "a nonnegative integer");
  return static_cast<std::size_t>(d);
}

std::uint64_t Section::u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    bad_value(name_, key, it->second, "an unsigned 64-bit integer");
  }
  if (pos != it->second.size() || it->second.front() == '-')
    bad_value(name_, key, it->second, "an unsigned 64-bit integer");
  return v;
}

bool Section::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  bad_value(name_, key, it->second, "true or false");
}

std::vector<double> Section::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split(text(key, ""), ", \t")) out.push_back(parse_real(name_, key, tok));
  return out;
}

std::filesystem::path Section::path(const std::string& key) const {
  const std::filesystem::path p = text(key, "");
  if (p.empty()) throw ConfigError("[" + name_ + "] " + key + " is empty");
  return p.is_absolute() ? p : base_dir_ / p;
}

void Section::allow_only(const std::vector<std::string>& keys) const {
  for (const auto& [k, v] : values_)
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("[" + name_ + "] unknown key '" + k + "'");
}

Section load_section(const std::optional<std::string>& path, const std::string& name) {
  if (!path) return Section(name, {}, std::filesystem::current_path());
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config file '" + *path + "'");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config file '" + *path + "': " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::map<std::string, std::string> values;
  if (const auto child = tree.get_child_optional(name)) {
    for (const auto& [k, v] : *child) {
      if (!v.empty()) throw ConfigError("config file '" + *path + "': nested key '" + k + "'");
      values[k] = v.data();
    }
  }
  return Section(name, std::move(values), std::filesystem::absolute(*path).parent_path());
}

std::vector<double> RateGrid::values() const { return linear_grid(min, max, count); }

ChannelDescription parse_channel_keys(const Section& s, bool state_revealing) {
  const auto kind = s.text("channel", s.name() == "fsc-curve" ? "two_state" : "bsc");
  if (kind == "bsc") return make_bsc(s.real("p", 0.1));
  if (kind == "two_state")
    return make_two_state_bsc_fsc(s.real("state_flip", 0.01), s.real("p0", 0.01), s.real("p1", 0.1), state_revealing);
  if (kind == "file") return load_channel(s.path("channel_file").string());
  bad_value(s.name(), "channel", kind, "bsc, two_state or file");
}

EnsembleSpec parse_ensemble(const Section& s, std::size_t input_size) {
  const auto input = s.has("input") ? InputDistribution(s.reals("input")) : InputDistribution::uniform(input_size);
  if (input.size() != input_size) throw ConfigError("[" + s.name() + "] input has the wrong number of symbols");
  const auto kind = ensemble_kind_from_string(s.text("ensemble", "iid"));
  if (kind == EnsembleKind::iid) return EnsembleSpec::iid(input);
  if (kind == EnsembleKind::constant_composition) return EnsembleSpec::constant_composition(input);
  std::vector<CostFunction> costs;
  for (const auto& part : split(s.text("costs", ""), "|")) {
    CostFunction c;
    for (const auto& tok : split(part, ", \t")) c.push_back(parse_real(s.name(), "costs", tok));
    if (!c.empty()) costs.push_back(std::move(c));
  }
  if (costs.empty()) throw ConfigError("[" + s.name() + "] cost ensemble needs costs = a(0) a(1) ... | ...");
  return EnsembleSpec::cost_constrained(input, std::move(costs), s.real("delta", 1.0));
}

Horizon parse_horizon(const Section& s) {
  const auto mode = s.text("mode", "asymptotic");
  if (mode == "asymptotic") return Horizon::asymptotic();
  if (mode != "finite") bad_value(s.name(), "mode", mode, "asymptotic or finite");
  const auto n = s.count("n", 0);
  if (n == 0) throw ConfigError("[" + s.name() + "] finite mode needs n >= 1");
  const auto kind = s.text("schedule", "power");
  if (kind == "power") return Horizon::finite(n, GammaSchedule::power(s.real("alpha", 2.0)));
  if (kind != "table") bad_value(s.name(), "schedule", kind, "power or table");
  const auto g = GammaSchedule::table(s.reals("gamma_table"));
  g.log_gamma(n);  // the table must reach n
  return Horizon::finite(n, g);
}

DmcCurveConfig parse_dmc_curve(const Section& s) {
  s.allow_only(join({channel_keys, ensemble_keys, horizon_keys,
                     {"rate_min", "rate_max", "rate_count", "units", "seed", "out", "q_sweep"}}));
  DmcCurveConfig c;
  const auto ch = parse_channel_keys(s, false);
  if (!std::holds_alternative<Dmc>(ch)) throw ConfigError("[dmc-curve] channel must be memoryless");
  c.channel = std::get<Dmc>(ch);
  c.ensemble = parse_ensemble(s, c.channel.input_size());
  c.units = parse_units(s);
  c.rates = parse_rates(s, c.units, c.rates);
  c.horizon = parse_horizon(s);
  c.seed = s.u64("seed", c.seed);
  c.out = s.text("out", "");
  c.q_sweep = s.flag("q_sweep", false);
  return c;
}

FscCurveConfig parse_fsc_curve(const Section& s) {
  s.allow_only(join({channel_keys, {"input", "mode", "schedule", "alpha", "gamma_table"},
                     {"rate_min", "rate_max", "rate_count", "units", "seed", "out", "n", "iterations", "lambda_grid",
                      "start", "reference", "reference_file", "threads"}}));
  FscCurveConfig c;
  const auto ch = parse_channel_keys(s, true);
  if (!std::holds_alternative<Fsc>(ch)) throw ConfigError("[fsc-curve] channel must be a finite-state channel");
  c.channel = std::get<Fsc>(ch);
  if (s.has("input")) c.input = InputDistribution(s.reals("input"));
  else c.input = InputDistribution::uniform(c.channel.input_size());
  if (c.input.size() != c.channel.input_size()) throw ConfigError("[fsc-curve] input has the wrong number of symbols");

  if (s.has("reference_file")) {
    const auto ref = load_channel(s.path("reference_file").string());
    if (!std::holds_alternative<Dmc>(ref)) throw ConfigError("[fsc-curve] reference_file must hold a dmc");
    c.reference = std::get<Dmc>(ref);
  } else if (s.text("channel", "two_state") == "two_state") {
    c.reference = make_two_state_reference_dmc(s.real("p0", 0.01), s.real("p1", 0.1));
  }
  c.emit_reference = s.flag("reference", false);

  c.units = parse_units(s);
  c.rates = parse_rates(s, c.units, c.rates);
  c.n = s.count("n", c.n);
  c.iterations = s.count("iterations", c.iterations);
  if (c.n == 0) throw ConfigError("[fsc-curve] n must be at least 1");
  if (c.iterations == 0) throw ConfigError("[fsc-curve] iterations must be at least 1");
  c.seed = s.u64("seed", c.seed);
  c.threads = static_cast<unsigned>(s.count("threads", 0));
  c.out = s.text("out", "");

  c.lambda_grid_name = s.text("lambda_grid", "default");
  if (c.lambda_grid_name == "default") {
    c.lambda_grid = default_lambda_grid();
  } else if (c.lambda_grid_name == "coarse") {
    c.lambda_grid = coarse_lambda_grid();
  } else {
    c.lambda_grid = s.reals("lambda_grid");
    c.lambda_grid_name = "custom(" + std::to_string(c.lambda_grid.size()) + ")";
    for (double l : c.lambda_grid)
      if (l < 1.0) throw ConfigError("[fsc-curve] lambda_grid entries must be >= 1");
    if (c.lambda_grid.empty()) throw ConfigError("[fsc-curve] lambda_grid is empty");
  }

  const auto start = s.text("start", "averaged");
  if (start != "averaged") {
    const auto s0 = s.count("start", 0);
    if (s0 >= c.channel.num_states()) throw ConfigError("[fsc-curve] start state out of range");
    c.start = StartState::fixed(s0);
  }

  const auto mode = s.text("mode", "asymptotic");
  if (mode == "finite") {
    const auto kind = s.text("schedule", "power");
    if (kind == "power") c.horizon = Horizon::finite(c.n, GammaSchedule::power(s.real("alpha", 2.0)));
    else if (kind == "table") c.horizon = Horizon::finite(c.n, GammaSchedule::table(s.reals("gamma_table")));
    else bad_value(s.name(), "schedule", kind, "power or table");
    c.horizon.iota();
  } else if (mode != "asymptotic") {
    bad_value(s.name(), "mode", mode, "asymptotic or finite");
  }
  return c;
}

ConcentrationConfig parse_concentration(const Section& s) {
  s.allow_only(join({channel_keys, ensemble_keys,
                     {"m", "n", "codebooks", "s", "gamma", "seed", "threads", "out"}}));
  ConcentrationConfig c;
  const auto ch = parse_channel_keys(s, false);
  if (!std::holds_alternative<Dmc>(ch)) throw ConfigError("[concentration] channel must be memoryless");
  auto& e = c.experiment;
  e.channel = std::get<Dmc>(ch);
  e.ensemble = parse_ensemble(s, e.channel.input_size());
  e.n = s.count("n", e.n);
  e.m = s.count("m", e.m);
  e.codebooks = s.count("codebooks", e.codebooks);
  e.s = s.real("s", e.s);
  e.gamma = s.real("gamma", e.gamma);
  e.seed = s.u64("seed", e.seed);
  c.threads = static_cast<unsigned>(s.count("threads", 0));
  c.out = s.text("out", "");
  try {
    e.validate();
  } catch (const DomainError& err) {
    throw ConfigError(std::string("[concentration] ") + err.what());
  }
  return c;
}

} // namespace trc::cli
