#include "trc/channel.hpp"

#include "trc/errors.hpp"
#include "trc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace trc {

namespace {

constexpr double stochastic_tol = 1e-12;

// Validates and renormalizes consecutive blocks of `width` entries.
void normalize_rows(std::vector<double>& v, std::size_t width, const char* what) {
  for (std::size_t r = 0; r * width < v.size(); ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double p = v[r * width + j];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0 + stochastic_tol) {
        std::ostringstream os;
        os << what << ": entry " << r * width + j << " = " << p << " is not a probability";
        throw DomainError(os.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > stochastic_tol) {
      std::ostringstream os;
      os.precision(17);
      os << what << ": row " << r << " sums to " << sum;
      throw DomainError(os.str());
    }
    for (std::size_t j = 0; j < width; ++j) v[r * width + j] /= sum;
  }
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << name << " = " << p << " outside [0,1]";
    throw DomainError(os.str());
  }
}

} // namespace

InputDistribution::InputDistribution(std::vector<double> q) : q_(std::move(q)) {
  if (q_.empty()) throw DomainError("input distribution: empty");
  normalize_rows(q_, q_.size(), "input distribution");
}

InputDistribution InputDistribution::uniform(std::size_t size) {
  return InputDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

InputDistribution InputDistribution::bernoulli(double p_one) {
  check_probability(p_one, "bernoulli parameter");
  return InputDistribution({1.0 - p_one, p_one});
}

std::vector<double> InputDistribution::cdf() const {
  std::vector<double> c(q_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < q_.size(); ++i) {
    acc += q_[i];
    c[i] = acc;
  }
  // Trailing zero-probability symbols must never be drawn.
  for (std::size_t i = q_.size(); i-- > 0;) {
    c[i] = 1.0;
    if (q_[i] > 0.0) break;
  }
  return c;
}

Dmc::Dmc(std::size_t input_size, std::size_t output_size, std::vector<double> w)
    : nx_(input_size), ny_(output_size), w_(std::move(w)) {
  if (nx_ < 2 || ny_ < 2) throw DomainError("dmc: alphabets need at least two symbols");
  if (w_.size() != nx_ * ny_) throw DomainError("dmc: matrix size does not match alphabets");
  normalize_rows(w_, ny_, "dmc");
}

Fsc::Fsc(std::size_t num_states, std::size_t input_size, std::size_t output_size,
         std::vector<double> kernel)
    : ns_(num_states), nx_(input_size), ny_(output_size), k_(std::move(kernel)) {
  if (ns_ < 1 || nx_ < 1 || ny_ < 1) throw DomainError("fsc: empty alphabet");
  if (k_.size() != ns_ * nx_ * ny_ * ns_) throw DomainError("fsc: kernel size does not match alphabets");
  normalize_rows(k_, ny_ * ns_, "fsc kernel");
}

bool Fsc::state_revealing() const {
  for (std::size_t sp = 0; sp < ns_; ++sp) {
    for (Symbol y = 0; y < ny_; ++y) {
      std::size_t found = ns_;
      for (Symbol x = 0; x < nx_; ++x) {
        for (std::size_t s = 0; s < ns_; ++s) {
          if ((*this)(sp, x, y, s) <= 0.0) continue;
          if (found != ns_ && found != s) return false;
          found = s;
        }
      }
    }
  }
  return true;
}

Dmc make_bsc(double p) {
  check_probability(p, "crossover probability");
  return Dmc(2, 2, {1.0 - p, p, p, 1.0 - p});
}

Fsc make_single_state_fsc(const Dmc& dmc) {
  const auto w = dmc.values();
  return Fsc(1, dmc.input_size(), dmc.output_size(), std::vector<double>(w.begin(), w.end()));
}

Fsc make_two_state_bsc_fsc(double q, double p0, double p1, bool state_revealing) {
  check_probability(q, "state flip probability");
  check_probability(p0, "p0");
  check_probability(p1, "p1");
  const double cross[2] = {p0, p1};
  const std::size_t ny = state_revealing ? 4 : 2;
  std::vector<double> k(2 * 2 * ny * 2, 0.0);
  auto at = [&](std::size_t sp, Symbol x, Symbol y, std::size_t s) -> double& {
    return k[((sp * 2 + x) * ny + y) * 2 + s];
  };
  for (std::size_t sp = 0; sp < 2; ++sp) {
    for (Symbol x = 0; x < 2; ++x) {
      for (Symbol b = 0; b < 2; ++b) {
        const double pb = (b == x) ? 1.0 - cross[sp] : cross[sp];
        for (std::size_t s = 0; s < 2; ++s) {
          const double ps = (s == sp) ? 1.0 - q : q;
          const Symbol y = state_revealing ? b + 2 * s : b;
          at(sp, x, y, s) += ps * pb;
        }
      }
    }
  }
  return Fsc(2, 2, ny, std::move(k));
}

Dmc make_two_state_reference_dmc(double p0, double p1) {
  check_probability(p0, "p0");
  check_probability(p1, "p1");
  return Dmc(2, 4,
             {0.5 * (1 - p0), 0.5 * p0, 0.5 * (1 - p1), 0.5 * p1,
              0.5 * p0, 0.5 * (1 - p0), 0.5 * p1, 0.5 * (1 - p1)});
}

double bhattacharyya(const Dmc& dmc, Symbol x, Symbol x2) {
  if (x >= dmc.input_size() || x2 >= dmc.input_size()) throw DomainError("bhattacharyya: symbol out of range");
  if (x == x2) return 1.0;
  double z = 0.0;
  for (Symbol y = 0; y < dmc.output_size(); ++y) z += std::sqrt(dmc(x, y) * dmc(x2, y));
  return std::min(z, 1.0);
}

std::vector<double> bhattacharyya_matrix(const Dmc& dmc) {
  const std::size_t nx = dmc.input_size();
  std::vector<double> z(nx * nx);
  for (Symbol a = 0; a < nx; ++a)
    for (Symbol b = 0; b < nx; ++b) z[a * nx + b] = bhattacharyya(dmc, a, b);
  return z;
}

std::vector<double> JointOutputTable::marginal() const {
  std::vector<double> m(num_sequences, 0.0);
  for (std::size_t i = 0; i < num_sequences; ++i)
    for (std::size_t s = 0; s < num_states; ++s) m[i] += p[i * num_states + s];
  return m;
}

JointOutputTable fsc_joint_output(const Fsc& fsc, std::span<const Symbol> x, std::size_t s0,
                                  std::size_t budget) {
  const std::size_t n = x.size();
  const std::size_t ny = fsc.output_size();
  const std::size_t ns = fsc.num_states();
  if (n == 0) throw DomainError("fsc_joint_output: empty input sequence");
  if (s0 >= ns) throw DomainError("fsc_joint_output: initial state out of range");
  for (Symbol xi : x)
    if (xi >= fsc.input_size()) throw DomainError("fsc_joint_output: input symbol out of range");
  const std::size_t total = checked_pow(ny, n, budget);
  if (total == 0) {
    std::ostringstream os;
    os << "fsc_joint_output: |Y|^n = " << ny << "^" << n << " exceeds enumeration budget " << budget;
    throw CapacityError(os.str());
  }

  std::vector<double> cur(ns, 0.0);
  cur[s0] = 1.0;
  std::size_t count = 1;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> next(count * ny * ns, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t sp = 0; sp < ns; ++sp) {
        const double mass = cur[i * ns + sp];
        if (mass == 0.0) continue;
        for (Symbol y = 0; y < ny; ++y)
          for (std::size_t s = 0; s < ns; ++s) next[(i * ny + y) * ns + s] += mass * fsc(sp, x[t], y, s);
      }
    }
    cur = std::move(next);
    count *= ny;
  }
  return JointOutputTable{n, ny, ns, count, std::move(cur)};
}

namespace {

// Forward pass along a fixed output; returns log of total mass.
double forward_log(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y,
                   std::vector<double> v) {
  const std::size_t ns = fsc.num_states();
  double log_scale = 0.0;
  std::vector<double> next(ns);
  for (std::size_t t = 0; t < x.size(); ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t sp = 0; sp < ns; ++sp) {
      if (v[sp] == 0.0) continue;
      for (std::size_t s = 0; s < ns; ++s) next[s] += v[sp] * fsc(sp, x[t], y[t], s);
    }
    double m = 0.0;
    for (double e : next) m = std::max(m, e);
    if (m == 0.0) return -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < ns; ++s) v[s] = next[s] / m;
    log_scale += std::log(m);
  }
  double total = 0.0;
  for (double e : v) total += e;
  return log_scale + std::log(total);
}

void check_sequences(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y) {
  if (x.size() != y.size()) throw DomainError("fsc likelihood: input and output lengths differ");
  if (x.empty()) throw DomainError("fsc likelihood: empty sequence");
  for (Symbol xi : x)
    if (xi >= fsc.input_size()) throw DomainError("fsc likelihood: input symbol out of range");
  for (Symbol yi : y)
    if (yi >= fsc.output_size()) throw DomainError("fsc likelihood: output symbol out of range");
}

} // namespace

double fsc_log_likelihood(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y,
                          std::size_t s0) {
  check_sequences(fsc, x, y);
  if (s0 >= fsc.num_states()) throw DomainError("fsc likelihood: initial state out of range");
  std::vector<double> v(fsc.num_states(), 0.0);
  v[s0] = 1.0;
  return forward_log(fsc, x, y, std::move(v));
}

double fsc_avg_likelihood(const Fsc& fsc, std::span<const Symbol> x, std::span<const Symbol> y) {
  check_sequences(fsc, x, y);
  const auto ns = fsc.num_states();
  std::vector<double> v(ns, 1.0 / static_cast<double>(ns));
  return std::exp(forward_log(fsc, x, y, std::move(v)));
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("channel file: '" + key + "' expects a positive integer, got '" + value + "'");
  }
  if (pos != value.size() || v == 0)
    throw ConfigError("channel file: '" + key + "' expects a positive integer, got '" + value + "'");
  return static_cast<std::size_t>(v);
}

} // namespace

ChannelDescription parse_channel(std::istream& in) {
  std::string type;
  std::size_t states = 1, inputs = 0, outputs = 0;
  bool have_states = false;
  std::vector<double> numbers;
  bool in_numbers = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon != std::string::npos && !in_numbers) {
      const std::string key = trim(line.substr(0, colon));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "type") {
        type = value;
      } else if (key == "states") {
        states = parse_size(key, value);
        have_states = true;
      } else if (key == "inputs") {
        inputs = parse_size(key, value);
      } else if (key == "outputs") {
        outputs = parse_size(key, value);
      } else if (key == "probabilities" || key == "kernel") {
        in_numbers = true;
        line = value;
      } else {
        throw ConfigError("channel file line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
      if (!in_numbers) continue;
    } else if (!in_numbers) {
      throw ConfigError("channel file line " + std::to_string(lineno) + ": expected 'key: value'");
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != tok.size())
        throw ConfigError("channel file line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      numbers.push_back(v);
    }
  }
  if (type != "dmc" && type != "fsc") throw ConfigError("channel file: 'type' must be dmc or fsc");
  if (inputs == 0 || outputs == 0) throw ConfigError("channel file: 'inputs' and 'outputs' are required");
  if (type == "dmc" && have_states && states != 1) throw ConfigError("channel file: dmc cannot have states");
  const std::size_t expected = type == "dmc" ? inputs * outputs : states * inputs * outputs * states;
  if (numbers.size() != expected) {
    std::ostringstream os;
    os << "channel file: expected " << expected << " probabilities, found " << numbers.size();
    throw ConfigError(os.str());
  }
  try {
    if (type == "dmc") return Dmc(inputs, outputs, std::move(numbers));
    return Fsc(states, inputs, outputs, std::move(numbers));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("channel file: ") + e.what());
  }
}

ChannelDescription load_channel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open channel file '" + path + "'");
  return parse_channel(in);
}

void write_channel(std::ostream& out, const Dmc& dmc) {
  out << "type: dmc\ninputs: " << dmc.input_size() << "\noutputs: " << dmc.output_size()
      << "\nprobabilities:\n";
  out.precision(17);
  for (Symbol x = 0; x < dmc.input_size(); ++x) {
    for (Symbol y = 0; y < dmc.output_size(); ++y) out << (y ? " " : "") << dmc(x, y);
    out << '\n';
  }
}

void write_channel(std::ostream& out, const Fsc& fsc) {
  out << "type: fsc\nstates: " << fsc.num_states() << "\ninputs: " << fsc.input_size()
      << "\noutputs: " << fsc.output_size() << "\nkernel:\n";
  out.precision(17);
  const std::size_t width = fsc.output_size() * fsc.num_states();
  const auto k = fsc.values();
  for (std::size_t r = 0; r * width < k.size(); ++r) {
    for (std::size_t j = 0; j < width; ++j) out << (j ? " " : "") << k[r * width + j];
    out << '\n';
  }
}

} // namespace trc
