#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "hmmseg/experiments.hpp"
#include "hmmseg/logspace.hpp"

namespace hmmseg {

namespace {

enum SmallProbAtom : std::size_t { kX = 0, kY = 1, kZ = 2 };
enum PeepingAtom : std::size_t { kPx = 0, kPy = 1, kPz = 2, kPa = 3 };

}  // namespace

ModelSpec small_prob_model() {
  ModelSpec spec;
  spec.transition = Matrix{{0.5, 0.5, 0.0, 0.0},
                           {0.25, 0.25, 0.25, 0.25},
                           {0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3},
                           {0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3}};
  spec.initial = {0.25, 0.25, 0.25, 0.25};
  // Emission constants cancel from every posterior, so both are 1.
  spec.emission = AbstractEmission{{"x", "y", "z"},
                                   Matrix{{1.0, 0.0, 1.0},  //
                                          {0.0, 1.0, 1.0},
                                          {1.0, 0.0, 1.0},
                                          {1.0, 0.0, 1.0}}};
  return spec;
}

ObservationSequence small_prob_observations(std::size_t m) {
  std::vector<std::size_t> xs(m, kX);
  xs.push_back(kY);
  return ObservationSequence::symbols(std::move(xs));
}

SmallProbReport counterexample_small_prob(std::size_t m) {
  if (m < 2) throw Error("m must be at least 2");
  const ModelSpec spec = small_prob_model();
  const Trellis tr(spec, small_prob_observations(m));
  SmallProbReport r;
  r.m = m;
  r.viterbi = viterbi(tr);
  r.tables = forward_backward(tr);
  r.classification_probability = r.tables.smoothing(m - 1, r.viterbi[m - 1]);
  r.closed_form = 1.0 / (1.0 + std::pow(4.0 / 3.0, static_cast<double>(m)));
  return r;
}

void PeepingConfig::check() const {
  if (m < 3) throw Error(fmt::format("m must be at least 3, got {}", m));
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(fmt::format("epsilon must lie in (0, 1/2), got {}", epsilon));
  if (!(delta > 0.0)) throw Error(fmt::format("delta must be positive, got {}", delta));
  if (!((1.0 + delta) * epsilon < 1.0 - epsilon))
    throw Error(fmt::format("(1 + delta) * epsilon < 1 - epsilon is violated for epsilon={}, delta={}", epsilon,
                            delta));
}

std::vector<double> peeping_stationary(double eps) {
  return {0.6 * (1.0 + 2.0 * eps) / (1.0 + 4.0 * eps), 1.2 * eps / (1.0 + 4.0 * eps), 0.4};
}

ModelSpec peeping_model(const PeepingConfig& c) {
  c.check();
  const double u = 2.0 / 3.0 * (1.0 - c.epsilon);
  const double v = 2.0 / 3.0 * c.epsilon;
  ModelSpec spec;
  spec.transition = Matrix{{u, v, 1.0 / 3}, {v, u, 1.0 / 3}, {0.5, 0.0, 0.5}};
  spec.initial = peeping_stationary(c.epsilon);
  // Columns: x, y, z, a.
  spec.emission = AbstractEmission{{"x", "y", "z", "a"},
                                   Matrix{{1.0, 1.0, 1.0, 1.0},  //
                                          {0.0, 1.0 + c.delta, 1.0, 1.0},
                                          {0.0, 1.0, 1.0, 0.0}}};
  return spec;
}

ObservationSequence peeping_observations(const PeepingConfig& c) {
  c.check();
  std::vector<std::size_t> xs{kPx, kPy};
  xs.insert(xs.end(), c.m - 2, kPz);
  xs.push_back(kPa);
  xs.push_back(kPx);
  return ObservationSequence::symbols(std::move(xs));
}

Matrix q_table(const PeepingConfig& c) {
  c.check();
  const double eps = c.epsilon;
  const double u = 2.0 / 3.0 * (1.0 - eps);
  const double v = 2.0 / 3.0 * eps;
  const auto pi = peeping_stationary(eps);
  const std::size_t n = c.length();
  const std::size_t m = c.m;

  Matrix logp(3, 3);
  const Matrix p{{u, v, 1.0 / 3}, {v, u, 1.0 / 3}, {0.5, 0.0, 0.5}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) logp(i, j) = safe_log(p(i, j));

  // alpha_t for t = 2..m (1-based); all emissions between are 1.
  std::vector<std::array<double, 3>> alpha(m + 1);
  alpha[2] = {std::log(pi[0] * u), std::log(pi[0] * v * (1.0 + c.delta)), std::log(pi[0] / 3.0)};
  for (std::size_t t = 3; t <= m; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      const std::array<double, 3> terms{alpha[t - 1][0] + logp(0, j), alpha[t - 1][1] + logp(1, j),
                                        alpha[t - 1][2] + logp(2, j)};
      alpha[t][j] = log_sum_exp(terms);
    }

  // gamma_t(i) = p(x_{t+1}^{n-1}, Y_{n-1} = 2 | Y_t = i) for t = 2..m; the
  // base case t = n-2 = m is one step into state 2 emitting a.
  std::vector<std::array<double, 3>> gamma(m + 1);
  gamma[m] = {std::log(v), std::log(u), kNegInf};
  for (std::size_t t = m - 1; t >= 2; --t)
    for (std::size_t i = 0; i < 3; ++i) {
      const std::array<double, 3> terms{logp(i, 0) + gamma[t + 1][0], logp(i, 1) + gamma[t + 1][1],
                                        logp(i, 2) + gamma[t + 1][2]};
      gamma[t][i] = log_sum_exp(terms);
    }

  Matrix q(n, 3, 0.0);
  q(0, 0) = 1.0;
  q(n - 2, 1) = 1.0;
  q(n - 1, 0) = 1.0;
  for (std::size_t t = 2; t <= m; ++t) {
    std::array<double, 3> lg{};
    for (std::size_t i = 0; i < 3; ++i) lg[i] = alpha[t][i] + gamma[t][i];
    const double norm = log_sum_exp(lg);
    for (std::size_t i = 0; i < 3; ++i) q(t - 1, i) = lg[i] == kNegInf ? 0.0 : std::exp(lg[i] - norm);
  }
  return q;
}

Matrix q_table_generic(const PeepingConfig& c) {
  const ModelSpec spec = peeping_model(c);
  const PinSet pins({{c.length() - 2, 1}});
  return forward_backward(spec, peeping_observations(c), pins).smoothing;
}

double peeping_limit(double eps) {
  const double u = 2.0 / 3.0 * (1.0 - eps);
  const double v = 2.0 / 3.0 * eps;
  const auto pi = peeping_stationary(eps);
  const double to_two = (pi[0] * v + pi[1] * u) * v;
  const double to_one = (pi[0] * u + pi[1] * v + pi[2] / 2.0) * u;
  return to_two / (to_one + to_two);
}

PeepingReport unsuccessful_peeping_report(const PeepingConfig& c) {
  c.check();
  const ModelSpec spec = peeping_model(c);
  const Trellis tr(spec, peeping_observations(c));
  const std::size_t n = c.length();
  const std::size_t peep = n - 2;  // 0-based index of Y_{n-1}

  PeepingReport r;
  r.config = c;
  const Matrix q = q_table(c);
  const Matrix q_generic = forward_backward(tr, PinSet({{peep, 1}})).smoothing;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      r.max_q_discrepancy = std::max(r.max_q_discrepancy, std::abs(q(t, i) - q_generic(t, i)));
  r.one_plus_sum_q2 = 1.0;
  for (std::size_t t = 1; t < c.m; ++t) {
    r.sum_q1 += q(t, 0);
    r.one_plus_sum_q2 += q(t, 1);
  }
  r.peeping_harmful = r.sum_q1 > r.one_plus_sum_q2;

  r.viterbi = viterbi(tr);
  r.restricted = viterbi(tr, PinSet({{peep, 1}}));
  r.viterbi_all_ones = std::all_of(r.viterbi.begin(), r.viterbi.end(), [](State s) { return s == 0; });
  StatePath expected(n, 1);
  expected.front() = expected.back() = 0;
  r.restricted_as_expected = r.restricted == expected;

  const PosteriorTables uncond = forward_backward(tr);
  r.prob_pinned_state = uncond.smoothing(peep, 1);
  r.limit = peeping_limit(c.epsilon);
  r.accuracy_viterbi = accuracy(uncond, r.viterbi);

  // Average over the revealed value s of Y_{n-1}; a zero-probability value
  // contributes nothing.
  for (State s = 0; s < 3; ++s) {
    const double weight = uncond.smoothing(peep, s);
    if (weight == 0.0) continue;
    const PinSet pin({{peep, s}});
    const PosteriorTables cond = forward_backward(tr, pin);
    r.accuracy_viterbi_by_cases += weight * accuracy(cond, r.viterbi);
    r.accuracy_after_peeping += weight * accuracy(cond, viterbi(tr, pin));
  }
  return r;
}

}  // namespace hmmseg
