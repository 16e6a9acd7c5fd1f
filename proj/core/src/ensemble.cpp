#include "trc/ensemble.hpp"

#include "trc/errors.hpp"
#include "trc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace trc {

const char* to_string(EnsembleKind kind) {
  switch (kind) {
  case EnsembleKind::iid: return "iid";
  case EnsembleKind::constant_composition: return "cc";
  case EnsembleKind::cost_constrained: return "cost";
  }
  return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "iid") return EnsembleKind::iid;
  if (name == "cc" || name == "constant_composition") return EnsembleKind::constant_composition;
  if (name == "cost" || name == "cost_constrained") return EnsembleKind::cost_constrained;
  throw DomainError("unknown ensemble kind '" + name + "'");
}

EnsembleSpec EnsembleSpec::iid(InputDistribution q) {
  EnsembleSpec s;
  s.q = std::move(q);
  return s;
}

EnsembleSpec EnsembleSpec::constant_composition(InputDistribution q) {
  EnsembleSpec s;
  s.kind = EnsembleKind::constant_composition;
  s.q = std::move(q);
  return s;
}

EnsembleSpec EnsembleSpec::cost_constrained(InputDistribution q, std::vector<CostFunction> costs, double delta) {
  EnsembleSpec s;
  s.kind = EnsembleKind::cost_constrained;
  s.q = std::move(q);
  s.costs = std::move(costs);
  s.delta = delta;
  s.validate();
  return s;
}

void EnsembleSpec::validate() const {
  const bool is_cost = kind == EnsembleKind::cost_constrained;
  if (is_cost && costs.empty()) throw DomainError("cost-constrained ensemble needs at least one cost function");
  if (!is_cost && !costs.empty()) throw DomainError("cost functions given for a non-cost ensemble");
  if (is_cost && !(delta > 0.0 && std::isfinite(delta))) throw DomainError("cost shell width must be positive");
  for (const auto& a : costs) {
    if (a.size() != q.size()) throw DomainError("cost function size does not match the input alphabet");
    for (double v : a)
      if (!std::isfinite(v)) throw DomainError("cost function has a non-finite value");
  }
}

std::vector<double> EnsembleSpec::cost_means() const {
  std::vector<double> phi;
  for (const auto& a : costs) {
    double s = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) s += q[x] * a[x];
    phi.push_back(s);
  }
  return phi;
}

std::vector<std::size_t> nearest_type_counts(const InputDistribution& q, std::size_t n) {
  if (n < q.size()) {
    std::ostringstream os;
    os << "nearest_type: blocklength " << n << " is smaller than the alphabet size " << q.size();
    throw DomainError(os.str());
  }
  const std::size_t k = q.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> rem(k);
  std::size_t used = 0;
  for (std::size_t x = 0; x < k; ++x) {
    const double t = q[x] * static_cast<double>(n);
    counts[x] = static_cast<std::size_t>(std::floor(t));
    rem[x] = t - static_cast<double>(counts[x]);
    used += counts[x];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++counts[order[i % k]];
  return counts;
}

InputDistribution nearest_type(const InputDistribution& q, std::size_t n) {
  const auto counts = nearest_type_counts(q, n);
  std::vector<double> t(counts.size());
  for (std::size_t x = 0; x < counts.size(); ++x) t[x] = static_cast<double>(counts[x]) / static_cast<double>(n);
  return InputDistribution(std::move(t));
}

namespace {

Codeword draw_iid(const std::vector<double>& cdf, std::size_t n, Stream& rng) {
  Codeword w(n);
  for (auto& s : w) s = rng.categorical(cdf);
  return w;
}

} // namespace

Codeword sample_codeword(const EnsembleSpec& spec, std::size_t n, Stream& rng) {
  if (n == 0) throw DomainError("sample_codeword: blocklength must be positive");
  switch (spec.kind) {
  case EnsembleKind::iid:
    return draw_iid(spec.q.cdf(), n, rng);
  case EnsembleKind::constant_composition: {
    const auto counts = nearest_type_counts(spec.q, n);
    Codeword w;
    w.reserve(n);
    for (std::size_t x = 0; x < counts.size(); ++x) w.insert(w.end(), counts[x], x);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(w[i], w[rng.below(i + 1)]);
    return w;
  }
  case EnsembleKind::cost_constrained: {
    spec.validate();
    const auto cdf = spec.q.cdf();
    const auto phi = spec.cost_means();
    std::vector<std::size_t> misses(spec.costs.size(), 0);
    for (std::size_t attempt = 0; attempt < spec.rejection_budget; ++attempt) {
      Codeword w = draw_iid(cdf, n, rng);
      bool ok = true;
      for (std::size_t l = 0; l < spec.costs.size(); ++l) {
        double total = 0.0;
        double scale = 1.0;
        for (Symbol s : w) {
          total += spec.costs[l][s];
          scale += std::abs(spec.costs[l][s]);
        }
        const double dev = std::abs(total - static_cast<double>(n) * phi[l]);
        if (dev > spec.delta + 1e-12 * scale) {
          ++misses[l];
          ok = false;
          break;
        }
      }
      if (ok) return w;
    }
    const auto worst = static_cast<std::size_t>(std::max_element(misses.begin(), misses.end()) - misses.begin());
    std::ostringstream os;
    os << "cost-constrained sampling: " << spec.rejection_budget << " attempts exhausted; cost function "
       << worst << " (|sum a - n*phi| <= " << spec.delta << ") rejected " << misses[worst] << " draws";
    throw SamplingError(os.str());
  }
  }
  throw DomainError("sample_codeword: unknown ensemble kind");
}

Codebook sample_codebook(const EnsembleSpec& spec, std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample_codebook: need at least one codeword");
  Codebook cb;
  cb.n = n;
  cb.words.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Stream rng(seed, i);
    cb.words.push_back(sample_codeword(spec, n, rng));
  }
  return cb;
}

void write_codebook(std::ostream& out, const Codebook& cb) {
  out << cb.n << ' ' << cb.size() << '\n';
  for (const auto& w : cb.words) {
    for (std::size_t i = 0; i < w.size(); ++i) out << (i ? " " : "") << w[i];
    out << '\n';
  }
}

Codebook read_codebook(std::istream& in) {
  Codebook cb;
  std::size_t m = 0;
  if (!(in >> cb.n >> m)) throw ConfigError("codebook: missing 'n m' header");
  cb.words.assign(m, Codeword(cb.n));
  for (auto& w : cb.words)
    for (auto& s : w)
      if (!(in >> s)) throw ConfigError("codebook: truncated codeword list");
  return cb;
}

} // namespace trc
