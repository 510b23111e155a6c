#include "hmmseg/refine.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "hmmseg/logspace.hpp"

namespace hmmseg {

namespace {

double min_of(const std::vector<double>& xs) { return *std::min_element(xs.begin(), xs.end()); }

Metrics metrics_from_tables(const Trellis& tr, const PosteriorTables& uncond, const PosteriorTables& cond,
                            const StatePath& path, const std::optional<StatePath>& truth) {
  Metrics m;
  if (truth) m.errors = hamming(path, *truth);
  const auto rho_cond = classification_probabilities(cond, path);
  m.expected_errors = static_cast<double>(path.size()) - std::accumulate(rho_cond.begin(), rho_cond.end(), 0.0);
  m.rho_min_cond = min_of(rho_cond);
  m.rho_min_uncond = min_of(classification_probabilities(uncond, path));
  const double joint = log_joint(tr, path);
  m.log_posterior = joint == kNegInf ? kNegInf : joint - uncond.log_likelihood;
  return m;
}

void check_truth(const Trellis& tr, const StatePath& truth) {
  if (truth.size() != tr.length())
    throw Error(fmt::format("true path has length {}, expected {}", truth.size(), tr.length()));
  if (log_joint(tr, truth) == kNegInf) throw Error("true path has zero likelihood for these observations");
}

}  // namespace

const char* to_string(ReplacementMode mode) { return mode == ReplacementMode::pmap ? "pmap" : "peeping"; }

void RefinementConfig::check(std::size_t num_states, std::size_t length) const {
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  const double cap = allow_large_delta ? 1.0 : 1.0 / static_cast<double>(num_states);
  const bool ok = allow_large_delta ? (delta > 0.0 && delta <= cap) : (delta > 0.0 && delta < cap);
  if (!ok)
    throw Error(allow_large_delta ? fmt::format("delta must lie in (0, 1], got {}", delta)
                                  : fmt::format("delta must lie in (0, 1/K) = (0, {}), got {}", cap, delta));
  if (mode == ReplacementMode::peeping && !true_path) throw Error("peeping mode requires a true path");
  if (true_path && true_path->size() != length)
    throw Error(fmt::format("true path has length {}, expected {}", true_path->size(), length));
}

PinSet RefinementTrace::pins() const {
  PinSet p;
  for (const auto& s : steps) p.add({s.time, s.state});
  return p;
}

std::size_t hamming(const StatePath& a, const StatePath& b) {
  if (a.size() != b.size()) throw Error("paths differ in length");
  std::size_t d = 0;
  for (std::size_t t = 0; t < a.size(); ++t) d += a[t] != b[t];
  return d;
}

Metrics compute_metrics(const Trellis& tr, const PosteriorTables& uncond, const StatePath& path, const PinSet& pins,
                        const std::optional<StatePath>& true_path) {
  if (pins.empty()) return metrics_from_tables(tr, uncond, uncond, path, true_path);
  if (log_likelihood(tr, pins) == kNegInf) {
    Metrics m;
    if (true_path) m.errors = hamming(path, *true_path);
    m.rho_min_uncond = min_of(classification_probabilities(uncond, path));
    const double joint = log_joint(tr, path);
    m.log_posterior = joint == kNegInf ? kNegInf : joint - uncond.log_likelihood;
    return m;
  }
  return metrics_from_tables(tr, uncond, forward_backward(tr, pins), path, true_path);
}

Metrics compute_metrics(const ModelSpec& spec, const ObservationSequence& obs, const StatePath& path,
                        const PinSet& pins, const std::optional<StatePath>& true_path) {
  const Trellis tr(spec, obs);
  return compute_metrics(tr, forward_backward(tr), path, pins, true_path);
}

RefinementResult iterative_refine(const ModelSpec& spec, const ObservationSequence& obs,
                                  const RefinementConfig& config) {
  const Trellis tr(spec, obs);
  config.check(tr.num_states(), tr.length());
  if (config.mode == ReplacementMode::peeping) check_truth(tr, *config.true_path);

  RefinementResult out;
  auto& trace = out.trace;
  const PosteriorTables uncond = forward_backward(tr);
  trace.initial_path = viterbi(tr);
  trace.initial_rho = classification_probabilities(uncond, trace.initial_path);
  trace.initial_metrics = metrics_from_tables(tr, uncond, uncond, trace.initial_path, config.true_path);

  PinSet pins;
  const PosteriorTables* cond = &uncond;
  PosteriorTables cond_storage;
  const StatePath* current = &trace.initial_path;
  const std::vector<double>* rho = &trace.initial_rho;

  for (std::size_t m = 1; m <= config.max_iterations; ++m) {
    const auto worst = std::min_element(rho->begin(), rho->end());
    if (*worst >= config.delta) {
      trace.stopped_by_threshold = true;
      break;
    }
    const auto t = static_cast<std::size_t>(worst - rho->begin());
    State w;
    if (config.mode == ReplacementMode::peeping) {
      w = (*config.true_path)[t];
    } else {
      const auto row = cond->smoothing.row(t);
      w = static_cast<State>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    pins.add({t, w});

    RefinementStep step{t, w, viterbi(tr, pins), {}, {}};
    cond_storage = forward_backward(tr, pins);
    cond = &cond_storage;
    step.rho = classification_probabilities(*cond, step.path);
    step.metrics = metrics_from_tables(tr, uncond, *cond, step.path, config.true_path);
    trace.steps.push_back(std::move(step));
    current = &trace.steps.back().path;
    rho = &trace.steps.back().rho;
  }
  if (!trace.stopped_by_threshold && min_of(*rho) >= config.delta) trace.stopped_by_threshold = true;
  out.path = *current;
  return out;
}

BunchResult bunch_refine(const ModelSpec& spec, const ObservationSequence& obs, const BunchSelection& selection,
                         ReplacementMode mode, const std::optional<StatePath>& true_path) {
  const Trellis tr(spec, obs);
  const std::size_t n = tr.length();
  if (mode == ReplacementMode::peeping) {
    if (!true_path) throw Error("peeping mode requires a true path");
    check_truth(tr, *true_path);
  } else if (true_path && true_path->size() != n) {
    throw Error(fmt::format("true path has length {}, expected {}", true_path->size(), n));
  }

  const PosteriorTables uncond = forward_backward(tr);
  const StatePath v = viterbi(tr);
  const auto rho = classification_probabilities(uncond, v);

  std::vector<std::size_t> chosen;
  if (const auto* th = std::get_if<ThresholdSelection>(&selection)) {
    if (!(th->delta > 0.0)) throw Error("bunch threshold must be positive");
    for (std::size_t t = 0; t < n; ++t)
      if (rho[t] <= th->delta) chosen.push_back(t);
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });
    order.resize(std::min(std::get<CountSelection>(selection).count, n));
    chosen = std::move(order);
  }

  const StatePath marginal = pmap(uncond);
  BunchResult out;
  for (auto t : chosen) out.pins.add({t, mode == ReplacementMode::peeping ? (*true_path)[t] : marginal[t]});

  if (log_likelihood(tr, out.pins) == kNegInf) {
    out.admissible = false;
    out.path = v;
    for (const auto& p : out.pins.pins()) out.path[p.time] = p.state;
  } else {
    out.path = out.pins.empty() ? v : viterbi(tr, out.pins);
  }
  out.metrics = compute_metrics(tr, uncond, out.path, out.pins, true_path);
  return out;
}

}  // namespace hmmseg
