#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmmseg/bounds.hpp"
#include "hmmseg/csv.hpp"
#include "hmmseg/experiments.hpp"
#include "hmmseg/refine.hpp"

namespace hmmseg::report {

using Metadata = std::vector<std::pair<std::string, std::string>>;

// Common header block: tool name, model hash (when a model is involved),
// seed (when randomness is involved) and free-form config pairs.
Metadata header(const std::string& command, const ModelSpec* spec, std::optional<std::uint64_t> seed,
                Metadata config = {});

// Long-format posterior dump: t, state, probability, plus 0/1 flags marking
// the Viterbi and PMAP states. States 1-based.
csv::Document decode(const ModelSpec& spec, const ObservationSequence& obs, Metadata meta);

// m, t_m, w_m, errors, expected_errors, rho_min_cond, rho_min_uncond,
// log_posterior; row m = 0 is the unrestricted Viterbi path.
csv::Document trace(const RefinementTrace& trace, Metadata meta);

// Pins then the final path, one row per position.
csv::Document bunch(const BunchResult& result, Metadata meta);

// position_class, bound, min_observed_rho, margin, variant; the observed
// columns are NA without a verification run.
csv::Document bounds(const BoundsReport& report, const std::optional<BoundsVerification>& verification,
                     Metadata meta);

csv::Document small_prob(const SmallProbReport& r, Metadata meta);

// One row per position with Q_t(1..3), followed by summary metadata.
csv::Document peeping(const PeepingReport& r, const Matrix& q, Metadata meta);

// algorithm, mode, m, errors, expected_errors, rho_min_uncond, rho_min_cond,
// log_posterior, admissible.
csv::Document protein(const ProteinExperimentResult& r, Metadata meta);

// Means and standard deviations per (delta, algorithm, mode).
csv::Document gaussian_summary(const GaussianExperimentResult& r, Metadata meta);

// Per-replicate rows.
csv::Document gaussian_records(const GaussianExperimentResult& r, Metadata meta);

}  // namespace hmmseg::report
