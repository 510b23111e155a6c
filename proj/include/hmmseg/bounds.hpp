#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "hmmseg/matrix.hpp"
#include "hmmseg/model.hpp"

namespace hmmseg {

// sigma1 = min over rows of (row min / row max); sigma2 the same over columns.
// Each is positive iff every transition is positive.
struct SigmaPair {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

SigmaPair sigma(const Matrix& transition);

// Lower bounds on P(Y_t = v_t | X^n) for the Viterbi path v.
struct EndpointBounds {
  double interior = 0.0;  // t = 2..n-1
  double first = 0.0;     // t = 1
  double last = 0.0;      // t = n
};

struct BoundsReport {
  EndpointBounds plain;
  std::size_t initial_support = 0;  // number of nonzero initial probabilities
  SigmaPair forward;
  // Present when the chain is irreducible: the variant that uses the larger
  // of the forward and time-reversed sigma products, valid when the initial
  // distribution is stationary.
  std::optional<SigmaPair> reversed;
  std::optional<EndpointBounds> stationary;
};

BoundsReport viterbi_bounds(const ModelSpec& spec);

// Throws Error("chain not irreducible") on a reducible chain.
EndpointBounds stationary_bounds(const ModelSpec& spec);

struct BoundCheck {
  enum class Position { first, interior, last };
  Position position;
  double bound;
  double min_observed_rho;
  double margin;  // min_observed_rho - bound
};

struct BoundsVerification {
  std::vector<BoundCheck> checks;
  std::size_t violations = 0;
  double worst_margin = 0.0;
  bool used_stationary_variant = false;
};

const char* to_string(BoundCheck::Position p);

// Decodes obs and compares every Viterbi classification probability with the
// bound for its position. The stationary variant is used when the initial
// distribution is stationary to within 1e-12.
BoundsVerification verify_bounds(const ModelSpec& spec, const ObservationSequence& obs);

struct ClusterSpec {
  std::set<State> states;
  std::set<std::size_t> core;  // symbol indices
  std::size_t primitivity_exponent = 0;
};

struct ClusterCheck {
  bool valid = false;
  std::size_t exponent = 0;
};

// Checks min_{s in C} f_s(x) > 0 and max_{s not in C} f_s(x) = 0 for every
// core symbol, then looks for the smallest r with (R^r) > 0 entrywise,
// R = transition restricted to C, up to the Wielandt bound (|C|-1)^2 + 1.
ClusterCheck check_cluster(const ModelSpec& spec, const std::set<State>& states, const std::set<std::size_t>& core);

struct StoppingTimes {
  std::size_t w;  // 1-based
  std::size_t u;  // 1-based
};

// For every t = 1..n: w_t is the first w > t + r ending a fully-core word
// x_{w-r}^w (else n); u_t is the last u < t - r starting one (else 1).
std::vector<StoppingTimes> stopping_times(const ObservationSequence& obs, const ClusterSpec& cluster);

struct TailEstimate {
  std::vector<double> survival;  // survival[k] = P(W*_t - t > k), k = 0..horizon
  double log_slope = 0.0;        // least-squares slope of log survival on k
  std::size_t censored = 0;      // samples with no word within the horizon
  bool warning = false;          // censored in more than half the samples
};

// Monte-Carlo estimate of the tail of W*_t - t, where W*_t is the end of the
// first fully-core word of length r + 1 starting after t. Chains start from
// the model's initial distribution.
TailEstimate empirical_tail(const ModelSpec& spec, const ClusterSpec& cluster, std::size_t samples,
                            std::size_t horizon, std::uint64_t seed, std::size_t t = 1);

}  // namespace hmmseg
