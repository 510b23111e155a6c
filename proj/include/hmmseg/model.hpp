#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hmmseg/matrix.hpp"

namespace hmmseg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// States are 0-based in memory; files and CSV output use 1-based labels.
using State = std::size_t;
using StatePath = std::vector<State>;

// K x A table of symbol probabilities; rows sum to one.
struct CategoricalEmission {
  std::vector<std::string> symbols;
  Matrix probabilities;
};

struct GaussianEmission {
  std::vector<double> means;
  std::vector<double> variances;
};

// K x A table of density values with respect to an unspecified reference
// measure. Entries may exceed one; only ratios enter the posteriors. Such a
// model cannot be sampled from.
struct AbstractEmission {
  std::vector<std::string> symbols;
  Matrix densities;
};

using EmissionModel = std::variant<CategoricalEmission, GaussianEmission, AbstractEmission>;

struct ModelSpec {
  Matrix transition;
  std::vector<double> initial;
  EmissionModel emission;

  std::size_t num_states() const { return initial.size(); }
};

class ObservationSequence {
 public:
  ObservationSequence() = default;
  static ObservationSequence symbols(std::vector<std::size_t> s) { return ObservationSequence(std::move(s)); }
  static ObservationSequence reals(std::vector<double> x) { return ObservationSequence(std::move(x)); }

  std::size_t size() const;
  bool is_symbolic() const { return std::holds_alternative<std::vector<std::size_t>>(data_); }
  const std::vector<std::size_t>& symbol_values() const { return std::get<std::vector<std::size_t>>(data_); }
  const std::vector<double>& real_values() const { return std::get<std::vector<double>>(data_); }

 private:
  explicit ObservationSequence(std::vector<std::size_t> s) : data_(std::move(s)) {}
  explicit ObservationSequence(std::vector<double> x) : data_(std::move(x)) {}

  std::variant<std::vector<std::size_t>, std::vector<double>> data_;
};

struct Sample {
  StatePath states;
  ObservationSequence observations;
};

using ValidationReport = std::vector<std::string>;

// Lists every violated invariant; empty iff the spec is valid.
ValidationReport validate(const ModelSpec& spec);

// Throws Error listing the problems when validate() is non-empty.
void require_valid(const ModelSpec& spec);

bool is_table_emission(const EmissionModel& emission);
bool is_generative(const EmissionModel& emission);
const std::vector<std::string>& symbol_names(const EmissionModel& emission);

// Reachability on the positive-entry graph.
bool is_irreducible(const Matrix& transition);

std::vector<double> stationary_distribution(const Matrix& transition);
std::vector<double> stationary_distribution(const ModelSpec& spec);

// q(s, s') = p(s', s) pi(s') / pi(s) under the stationary distribution.
Matrix reverse_chain(const Matrix& transition);
Matrix reverse_chain(const ModelSpec& spec);

// n x K table of log f_s(x_t). Throws on symbols outside the alphabet or on
// an observation kind that does not match the emission model.
Matrix emission_log_densities(const ModelSpec& spec, const ObservationSequence& obs);

Sample sample(const ModelSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace hmmseg
