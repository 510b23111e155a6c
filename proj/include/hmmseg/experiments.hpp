#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmmseg/inference.hpp"
#include "hmmseg/model.hpp"
#include "hmmseg/refine.hpp"

namespace hmmseg {

// ---------------------------------------------------------------------------
// Vanishing classification probability with forbidden transitions.
//
// Four states, transitions
//   1/2 1/2  0   0
//   1/4 1/4 1/4 1/4
//    0  1/3 1/3 1/3
//    0  1/3 1/3 1/3
// uniform start, atoms {x, y, z}: x is impossible in state 2, y only possible
// in state 2, z possible everywhere. Observing x^m y forces the Viterbi path
// 1,...,1,2 while P(Y_m = 1 | X) = 1 / (1 + (4/3)^m).

ModelSpec small_prob_model();
ObservationSequence small_prob_observations(std::size_t m);

struct SmallProbReport {
  std::size_t m = 0;
  StatePath viterbi;
  double classification_probability = 0.0;  // P(Y_m = v_m | X^n)
  double closed_form = 0.0;                 // 1 / (1 + (4/3)^m)
  PosteriorTables tables;
};

SmallProbReport counterexample_small_prob(std::size_t m);

// ---------------------------------------------------------------------------
// Peeping that lowers accuracy.
//
// Three states with u = 2/3 (1 - eps), v = 2/3 eps:
//   u   v  1/3
//   v   u  1/3
//  1/2  0  1/2
// stationary start, atoms x, y, z, a with f(x) = (1, 0, 0),
// f(y) = (1, 1 + delta, 1), f(z) = (1, 1, 1), f(a) = (1, 1, 0), and
// observations x y z^(m-2) a x of length n = m + 2. Revealing Y_{n-1}
// lowers the expected number of correctly classified states once m is
// moderately large.

struct PeepingConfig {
  std::size_t m = 7;
  double epsilon = 0.2;
  double delta = 1.0;

  // Requires m >= 3, 0 < epsilon < 1/2, delta > 0 and
  // (1 + delta) epsilon < 1 - epsilon.
  void check() const;
  std::size_t length() const { return m + 2; }
};

std::vector<double> peeping_stationary(double epsilon);
ModelSpec peeping_model(const PeepingConfig& config);
ObservationSequence peeping_observations(const PeepingConfig& config);

// q(t, i) = P(Y_t = i | X^n = x^n, Y_{n-1} = 2), n x 3, computed with the
// dedicated forward and restricted-backward recursions of this model.
Matrix q_table(const PeepingConfig& config);

// The same quantity from the generic trellis with the pin (n-1 -> 2).
Matrix q_table_generic(const PeepingConfig& config);

// Closed-form m -> infinity limit of P(Y_{n-1} = 2 | X^n).
double peeping_limit(double epsilon);

struct PeepingReport {
  PeepingConfig config;
  double sum_q1 = 0.0;          // sum_{t=2}^m Q_t(1)
  double one_plus_sum_q2 = 0.0;  // 1 + sum_{t=2}^m Q_t(2)
  bool peeping_harmful = false;  // sum_q1 > one_plus_sum_q2
  StatePath viterbi;
  StatePath restricted;  // Viterbi given Y_{n-1} = 2
  bool viterbi_all_ones = false;
  bool restricted_as_expected = false;  // 1, 2, ..., 2, 1
  double prob_pinned_state = 0.0;       // P(Y_{n-1} = 2 | X^n)
  double limit = 0.0;
  double accuracy_viterbi = 0.0;
  double accuracy_viterbi_by_cases = 0.0;  // averaged over the value of Y_{n-1}
  double accuracy_after_peeping = 0.0;     // averaged over the value of Y_{n-1}
  double max_q_discrepancy = 0.0;          // q_table vs q_table_generic
};

PeepingReport unsuccessful_peeping_report(const PeepingConfig& config);

// ---------------------------------------------------------------------------
// Simulations.

struct ProteinModel {
  ModelSpec spec;
  // Largest per-entry change from renormalizing the rounded
  // emission columns.
  double max_adjustment = 0.0;
};

// Six-state secondary-structure model over the 20 amino acids.
ProteinModel protein_model();

enum class Algorithm { viterbi, pmap, bunch, iterative };
const char* to_string(Algorithm a);

struct ExperimentRow {
  Algorithm algorithm;
  ReplacementMode mode;
  std::size_t m;  // replacements (bunch) or iterations (iterative)
  Metrics metrics;
  bool admissible = true;
};

struct ProteinExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  std::vector<std::size_t> schedule{1, 2, 3, 4, 5, 10, 15, 20, 25, 30, 35, 37, 40, 50, 60, 70, 77, 78};
  std::vector<ReplacementMode> modes{ReplacementMode::pmap, ReplacementMode::peeping};
};

struct ProteinExperimentResult {
  ProteinExperimentConfig config;
  Sample data;
  double max_adjustment = 0.0;
  ExperimentRow viterbi;
  ExperimentRow pmap;
  std::vector<ExperimentRow> rows;  // bunch and iterative, per mode and m
};

// Samples one sequence and tabulates bunch replacement counts and iterative
// iteration counts from the schedule. Iterative rows come from one run with
// the threshold lifted to 1 so the loop never quits early.
ProteinExperimentResult run_protein_experiment(const ProteinExperimentConfig& config);

struct InadmissibleBunch {
  std::uint64_t seed;
  std::size_t count;  // smallest replacement count with zero posterior
};

// Scans seeds first_seed, first_seed + 1, ... for a sequence whose bunch
// PMAP replacement yields a zero-posterior path for some count up to the
// number of positions with rho <= threshold.
std::optional<InadmissibleBunch> find_inadmissible_bunch_seed(std::uint64_t first_seed, std::size_t max_seeds,
                                                              std::size_t n = 1000, double threshold = 0.1);

ModelSpec gaussian_model();

struct GaussianExperimentConfig {
  std::size_t replicates = 100;
  std::size_t n = 1000;
  std::vector<double> deltas{0.20, 0.25, 0.30};
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct ReplicateRecord {
  std::size_t replicate;
  std::uint64_t seed;
  double delta;  // 0 for baseline rows
  ExperimentRow row;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

struct GaussianSummaryRow {
  double delta;
  Algorithm algorithm;
  ReplacementMode mode;
  Summary replacements;
  Summary errors;
  Summary expected_errors;
  Summary rho_min_uncond;
  Summary rho_min_cond;
  Summary log_posterior;
};

struct GaussianExperimentResult {
  GaussianExperimentConfig config;
  std::vector<ReplicateRecord> records;  // sorted by (replicate, delta, algorithm, mode)
  std::vector<GaussianSummaryRow> summary;
};

// Threshold-based bunch and iterative refinement in both modes on the
// symmetric two-state N(0,1) / N(0.5,1) model. Replicate k uses the seed
// Rng::derive(seed, k).
GaussianExperimentResult run_gaussian_experiment(const GaussianExperimentConfig& config);

Summary summarize(const std::vector<double>& xs);

}  // namespace hmmseg
