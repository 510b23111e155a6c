#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "hmmseg/inference.hpp"
#include "hmmseg/model.hpp"

namespace hmmseg {

enum class ReplacementMode {
  pmap,     // pin the most probable state given the earlier pins
  peeping,  // pin the revealed true state
};

const char* to_string(ReplacementMode mode);

struct RefinementConfig {
  double delta = 0.1;
  std::size_t max_iterations = 1;
  ReplacementMode mode = ReplacementMode::pmap;
  std::optional<StatePath> true_path;
  // The threshold is restricted to 0 < delta < 1/K unless this is set.
  bool allow_large_delta = false;

  // Throws Error on a violated invariant.
  void check(std::size_t num_states, std::size_t length) const;
};

// Summary of one alignment. Optional fields are undefined when the truth is
// unknown or the pin set has zero likelihood.
struct Metrics {
  std::optional<std::size_t> errors;
  std::optional<double> expected_errors;
  double rho_min_uncond = 0.0;
  std::optional<double> rho_min_cond;
  double log_posterior = 0.0;
};

struct RefinementStep {
  std::size_t time;  // t_m
  State state;       // w_m
  StatePath path;    // v^(m)
  std::vector<double> rho;  // conditional classification probabilities of v^(m)
  Metrics metrics;
};

struct RefinementTrace {
  StatePath initial_path;  // unrestricted Viterbi
  std::vector<double> initial_rho;
  Metrics initial_metrics;
  std::vector<RefinementStep> steps;
  // True when the loop quit because every conditional probability reached delta.
  bool stopped_by_threshold = false;

  PinSet pins() const;
};

struct RefinementResult {
  StatePath path;
  RefinementTrace trace;
};

// Pin one worst position per round and re-decode: t_m is the position with
// the smallest conditional classification probability of the current path
// (smallest t on ties), w_m is the conditional PMAP state there (or the true
// state when peeping), then the restricted Viterbi path and the conditional
// probabilities are recomputed under all pins so far.
RefinementResult iterative_refine(const ModelSpec& spec, const ObservationSequence& obs,
                                  const RefinementConfig& config);

struct ThresholdSelection {
  double delta;  // pin every t with rho_t <= delta
};
struct CountSelection {
  std::size_t count;  // pin the `count` smallest rho_t, ordered by (rho_t, t)
};
using BunchSelection = std::variant<ThresholdSelection, CountSelection>;

struct BunchResult {
  // Restricted Viterbi path. When the pins are inadmissible this is the
  // overlay "unrestricted Viterbi outside the pins, pinned state on them".
  StatePath path;
  PinSet pins;
  bool admissible = true;
  Metrics metrics;
};

// Pin all selected low-probability positions at once, then decode once.
BunchResult bunch_refine(const ModelSpec& spec, const ObservationSequence& obs, const BunchSelection& selection,
                         ReplacementMode mode, const std::optional<StatePath>& true_path = std::nullopt);

// errors: Hamming distance to the truth; expected_errors: n minus the sum of
// pin-conditional classification probabilities; rho_min over unconditional
// and conditional smoothing; log_posterior of the path (unconditional).
Metrics compute_metrics(const ModelSpec& spec, const ObservationSequence& obs, const StatePath& path,
                        const PinSet& pins, const std::optional<StatePath>& true_path = std::nullopt);

// Same, reusing a trellis and the unconditional posteriors.
Metrics compute_metrics(const Trellis& trellis, const PosteriorTables& unconditional, const StatePath& path,
                        const PinSet& pins, const std::optional<StatePath>& true_path = std::nullopt);

std::size_t hamming(const StatePath& a, const StatePath& b);

}  // namespace hmmseg
