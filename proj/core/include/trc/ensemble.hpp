#pragma once

#include "trc/channel.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trc {

class Stream;

enum class EnsembleKind { iid, constant_composition, cost_constrained };

const char* to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

using CostFunction = std::vector<double>;

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::iid;
  InputDistribution q = InputDistribution::uniform(2);
  std::vector<CostFunction> costs;
  double delta = 1.0;
  std::size_t rejection_budget = 1'000'000;

  static EnsembleSpec iid(InputDistribution q);
  static EnsembleSpec constant_composition(InputDistribution q);
  static EnsembleSpec cost_constrained(InputDistribution q, std::vector<CostFunction> costs, double delta = 1.0);

  // Throws DomainError if the fields violate the ensemble's requirements.
  void validate() const;

  // phi_l = sum_x Q(x) a_l(x).
  std::vector<double> cost_means() const;
};

using Codeword = std::vector<Symbol>;

struct Codebook {
  std::size_t n = 0;
  std::vector<Codeword> words;

  std::size_t size() const noexcept { return words.size(); }
};

// Counts n_x of a type with denominator n and |n_x/n - Q(x)| <= 1/n,
// by largest remainder with ties to the lowest index.
std::vector<std::size_t> nearest_type_counts(const InputDistribution& q, std::size_t n);
InputDistribution nearest_type(const InputDistribution& q, std::size_t n);

Codeword sample_codeword(const EnsembleSpec& spec, std::size_t n, Stream& rng);

// Codeword i is drawn from the stream keyed by (seed, i).
Codebook sample_codebook(const EnsembleSpec& spec, std::size_t n, std::size_t m, std::uint64_t seed);

// Header "n m", then one space separated codeword per line.
void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in);

} // namespace trc
