#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hmmseg/matrix.hpp"
#include "hmmseg/model.hpp"

namespace hmmseg {

struct Pin {
  std::size_t time;  // 0-based
  State state;
};

// Time-indexed state constraints, kept in insertion order. Times are distinct.
class PinSet {
 public:
  PinSet() = default;
  explicit PinSet(std::vector<Pin> pins);

  void add(Pin pin);
  const std::vector<Pin>& pins() const { return pins_; }
  std::size_t size() const { return pins_.size(); }
  bool empty() const { return pins_.empty(); }
  std::optional<State> state_at(std::size_t time) const;

  // Throws when a pin falls outside an n x K trellis.
  void check_bounds(std::size_t n, std::size_t k) const;

 private:
  std::vector<Pin> pins_;
};

// Log-space view of one decoding problem: the model's log initial and
// transition probabilities and the n x K table of log emission densities.
// Built once per (model, observations) and reused across pin sets.
class Trellis {
 public:
  Trellis(const ModelSpec& spec, const ObservationSequence& obs);

  std::size_t length() const { return log_emission_.rows(); }
  std::size_t num_states() const { return log_initial_.size(); }
  const std::vector<double>& log_initial() const { return log_initial_; }
  const Matrix& log_transition() const { return log_transition_; }
  const Matrix& log_emission() const { return log_emission_; }

  // Emission table with log f_s(x_t) = -inf for s != w at every pin (t, w).
  Matrix masked_emission(const PinSet& pins) const;

 private:
  std::vector<double> log_initial_;
  Matrix log_transition_;
  Matrix log_emission_;
};

struct PosteriorTables {
  Matrix log_forward;   // log alpha(x^t, s)
  Matrix log_backward;  // log p(x_{t+1}^n | Y_t = s)
  double log_likelihood = 0.0;
  Matrix smoothing;     // P(Y_t = s | X^n = x^n, pins)

  std::size_t length() const { return smoothing.rows(); }
  std::size_t num_states() const { return smoothing.cols(); }
};

// Throws Error("inadmissible pin set") when the pins have zero likelihood.
PosteriorTables forward_backward(const Trellis& trellis, const PinSet& pins = {});
PosteriorTables forward_backward(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins = {});

// log p(x^n, pins-consistent paths); -inf is a valid result.
double log_likelihood(const Trellis& trellis, const PinSet& pins = {});
double log_likelihood(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins = {});

// Relative tolerance under which two log scores count as tied.
inline constexpr double kTieTolerance = 1e-11;

// Maximum-posterior path among those agreeing with the pins. Ties go to the
// smallest state index at every backtracking choice, including the final
// state. Throws Error("no admissible path") when no path has positive
// probability.
StatePath viterbi(const Trellis& trellis, const PinSet& pins = {});
StatePath viterbi(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins = {});

// Pointwise argmax of the smoothing probabilities, smallest index on ties.
// The result may have zero posterior probability.
StatePath pmap(const PosteriorTables& tables);
StatePath pmap(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins = {});

// rho_t = smoothing[t][path_t].
std::vector<double> classification_probabilities(const PosteriorTables& tables, const StatePath& path);

// Sum of classification probabilities: the expected number of correctly
// classified positions.
double accuracy(const PosteriorTables& tables, const StatePath& path);

// log p(x^n, y^n) accumulated left to right.
double log_joint(const Trellis& trellis, const StatePath& path);

// log P(Y^n = path | X^n = x^n); -inf iff the path is inadmissible.
double path_log_posterior(const Trellis& trellis, const StatePath& path);
double path_log_posterior(const ModelSpec& spec, const ObservationSequence& obs, const StatePath& path);

}  // namespace hmmseg
