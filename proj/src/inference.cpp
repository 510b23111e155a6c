#include "hmmseg/inference.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hmmseg/logspace.hpp"

namespace hmmseg {

PinSet::PinSet(std::vector<Pin> pins) {
  for (const auto& p : pins) add(p);
}

void PinSet::add(Pin pin) {
  if (state_at(pin.time)) throw Error(fmt::format("time {} is already pinned", pin.time + 1));
  pins_.push_back(pin);
}

std::optional<State> PinSet::state_at(std::size_t time) const {
  for (const auto& p : pins_)
    if (p.time == time) return p.state;
  return std::nullopt;
}

void PinSet::check_bounds(std::size_t n, std::size_t k) const {
  for (const auto& p : pins_) {
    if (p.time >= n) throw Error(fmt::format("pin time {} outside 1..{}", p.time + 1, n));
    if (p.state >= k) throw Error(fmt::format("pin state {} outside 1..{}", p.state + 1, k));
  }
}

Trellis::Trellis(const ModelSpec& spec, const ObservationSequence& obs)
    : log_transition_(spec.num_states(), spec.num_states()), log_emission_(emission_log_densities(spec, obs)) {
  const std::size_t k = spec.num_states();
  log_initial_.resize(k);
  for (std::size_t s = 0; s < k; ++s) log_initial_[s] = safe_log(spec.initial[s]);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) log_transition_(i, j) = safe_log(spec.transition(i, j));
  if (log_emission_.rows() == 0) throw Error("observation sequence is empty");
}

Matrix Trellis::masked_emission(const PinSet& pins) const {
  pins.check_bounds(length(), num_states());
  Matrix e = log_emission_;
  for (const auto& p : pins.pins())
    for (std::size_t s = 0; s < num_states(); ++s)
      if (s != p.state) e(p.time, s) = kNegInf;
  return e;
}

namespace {

// Smallest index whose value is within the tie tolerance of the maximum.
template <class Range>
State first_near_max(const Range& xs) {
  const double best = *std::max_element(xs.begin(), xs.end());
  if (best == kNegInf) return 0;
  const double slack = kTieTolerance * std::max(1.0, std::abs(best));
  State i = 0;
  while (xs[i] < best - slack) ++i;
  return i;
}

Matrix forward_pass(const Trellis& tr, const Matrix& emission) {
  const std::size_t n = tr.length();
  const std::size_t k = tr.num_states();
  const Matrix& lp = tr.log_transition();
  Matrix fwd(n, k, kNegInf);
  for (std::size_t s = 0; s < k; ++s) fwd(0, s) = tr.log_initial()[s] + emission(0, s);
  std::vector<double> terms(k);
  for (std::size_t t = 1; t < n; ++t)
    for (std::size_t j = 0; j < k; ++j) {
      if (emission(t, j) == kNegInf) continue;
      for (std::size_t i = 0; i < k; ++i) terms[i] = fwd(t - 1, i) + lp(i, j);
      fwd(t, j) = log_sum_exp(terms) + emission(t, j);
    }
  return fwd;
}

}  // namespace

PosteriorTables forward_backward(const Trellis& tr, const PinSet& pins) {
  const Matrix emission = tr.masked_emission(pins);
  const std::size_t n = tr.length();
  const std::size_t k = tr.num_states();
  const Matrix& lp = tr.log_transition();

  PosteriorTables out;
  out.log_forward = forward_pass(tr, emission);
  out.log_likelihood = log_sum_exp(out.log_forward.row(n - 1));
  if (out.log_likelihood == kNegInf) throw Error("inadmissible pin set");

  out.log_backward = Matrix(n, k, kNegInf);
  for (std::size_t s = 0; s < k; ++s) out.log_backward(n - 1, s) = 0.0;
  std::vector<double> terms(k);
  for (std::size_t t = n - 1; t-- > 0;)
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) terms[j] = lp(i, j) + emission(t + 1, j) + out.log_backward(t + 1, j);
      out.log_backward(t, i) = log_sum_exp(terms);
    }

  out.smoothing = Matrix(n, k);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < k; ++s) {
      const double lg = out.log_forward(t, s) + out.log_backward(t, s);
      out.smoothing(t, s) = lg == kNegInf ? 0.0 : std::clamp(std::exp(lg - out.log_likelihood), 0.0, 1.0);
    }
  // Pinned rows are exactly one-hot rather than 1 - rounding noise.
  for (const auto& p : pins.pins())
    for (std::size_t s = 0; s < k; ++s) out.smoothing(p.time, s) = s == p.state ? 1.0 : 0.0;
  return out;
}

PosteriorTables forward_backward(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins) {
  return forward_backward(Trellis(spec, obs), pins);
}

double log_likelihood(const Trellis& tr, const PinSet& pins) {
  const Matrix fwd = forward_pass(tr, tr.masked_emission(pins));
  return log_sum_exp(fwd.row(tr.length() - 1));
}

double log_likelihood(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins) {
  return log_likelihood(Trellis(spec, obs), pins);
}

StatePath viterbi(const Trellis& tr, const PinSet& pins) {
  const Matrix emission = tr.masked_emission(pins);
  const std::size_t n = tr.length();
  const std::size_t k = tr.num_states();
  const Matrix& lp = tr.log_transition();

  // Scores within kTieTolerance (relative) count as equal, so mathematically
  // tied paths whose sums round differently still resolve to the smallest
  // state index.
  Matrix delta(n, k, kNegInf);
  std::vector<std::vector<State>> back(n, std::vector<State>(k, 0));
  std::vector<double> cand(k);
  for (std::size_t s = 0; s < k; ++s) delta(0, s) = tr.log_initial()[s] + emission(0, s);
  for (std::size_t t = 1; t < n; ++t)
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) cand[i] = (delta(t - 1, i) + lp(i, j)) + emission(t, j);
      back[t][j] = first_near_max(cand);
      delta(t, j) = *std::max_element(cand.begin(), cand.end());
    }

  const auto final_row = delta.row(n - 1);
  const double best = *std::max_element(final_row.begin(), final_row.end());
  const State last = first_near_max(final_row);
  if (best == kNegInf) throw Error("no admissible path");

  StatePath path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

StatePath viterbi(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins) {
  return viterbi(Trellis(spec, obs), pins);
}

StatePath pmap(const PosteriorTables& tables) {
  StatePath path(tables.length());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const auto row = tables.smoothing.row(t);
    path[t] = static_cast<State>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return path;
}

StatePath pmap(const ModelSpec& spec, const ObservationSequence& obs, const PinSet& pins) {
  return pmap(forward_backward(spec, obs, pins));
}

std::vector<double> classification_probabilities(const PosteriorTables& tables, const StatePath& path) {
  if (path.size() != tables.length())
    throw Error(fmt::format("path length {} does not match {} positions", path.size(), tables.length()));
  std::vector<double> rho(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (path[t] >= tables.num_states()) throw Error(fmt::format("state {} out of range", path[t] + 1));
    rho[t] = tables.smoothing(t, path[t]);
  }
  return rho;
}

double accuracy(const PosteriorTables& tables, const StatePath& path) {
  double acc = 0.0;
  for (double r : classification_probabilities(tables, path)) acc += r;
  return acc;
}

double log_joint(const Trellis& tr, const StatePath& path) {
  if (path.size() != tr.length())
    throw Error(fmt::format("path length {} does not match {} observations", path.size(), tr.length()));
  for (auto s : path)
    if (s >= tr.num_states()) throw Error(fmt::format("state {} out of range", s + 1));
  const Matrix& e = tr.log_emission();
  double acc = tr.log_initial()[path[0]] + e(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t) acc = (acc + tr.log_transition()(path[t - 1], path[t])) + e(t, path[t]);
  return acc;
}

double path_log_posterior(const Trellis& tr, const StatePath& path) {
  const double joint = log_joint(tr, path);
  if (joint == kNegInf) return kNegInf;
  return joint - log_likelihood(tr);
}

double path_log_posterior(const ModelSpec& spec, const ObservationSequence& obs, const StatePath& path) {
  return path_log_posterior(Trellis(spec, obs), path);
}

}  // namespace hmmseg
