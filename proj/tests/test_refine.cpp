#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hmmseg/experiments.hpp"
#include "hmmseg/logspace.hpp"
#include "hmmseg/refine.hpp"
#include "oracle.hpp"

using namespace hmmseg;

namespace {

std::pair<ModelSpec, ObservationSequence> instance(Rng& rng, std::size_t k, std::size_t n, bool gaussian,
                                                   double zero_prob) {
  while (true) {
    ModelSpec spec = oracle::random_model(rng, k, gaussian, zero_prob);
    ObservationSequence obs = oracle::random_observations(rng, spec, n);
    if (log_likelihood(spec, obs) > kNegInf) return {spec, obs};
  }
}

// The iterative algorithm replayed with exhaustive marginals and argmaxes.
struct OracleStep {
  std::size_t time;
  State state;
  StatePath path;
};

std::vector<OracleStep> oracle_iterative(const ModelSpec& spec, const ObservationSequence& obs, double delta,
                                         std::size_t max_iter) {
  const std::size_t n = obs.size(), k = spec.num_states();
  PinSet pins;
  StatePath path = *oracle::viterbi(oracle::enumerate(spec, obs));
  Matrix smooth = *oracle::smoothing(oracle::enumerate(spec, obs), n, k);
  std::vector<OracleStep> steps;
  for (std::size_t m = 0; m < max_iter; ++m) {
    std::size_t worst = 0;
    for (std::size_t t = 1; t < n; ++t)
      if (smooth(t, path[t]) < smooth(worst, path[worst])) worst = t;
    if (smooth(worst, path[worst]) >= delta) break;
    State w = 0;
    for (State s = 1; s < k; ++s)
      if (smooth(worst, s) > smooth(worst, w)) w = s;
    pins.add({worst, w});
    const auto e = oracle::enumerate(spec, obs, pins);
    path = *oracle::viterbi(e);
    smooth = *oracle::smoothing(e, n, k);
    steps.push_back({worst, w, path});
  }
  return steps;
}

}  // namespace

TEST_CASE("configuration checks") {
  RefinementConfig c;
  c.delta = 0.5;
  CHECK_THROWS_AS(c.check(2, 10), Error);  // delta must stay below 1/K
  c.delta = 0.3;
  CHECK_NOTHROW(c.check(3, 10));
  CHECK_THROWS_AS(c.check(4, 10), Error);
  c.delta = 0.9;
  c.allow_large_delta = true;
  CHECK_NOTHROW(c.check(4, 10));
  c.delta = 0.1;
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.check(2, 10), Error);
  c.max_iterations = 3;
  c.mode = ReplacementMode::peeping;
  CHECK_THROWS_WITH_AS(c.check(2, 10), "peeping mode requires a true path", Error);
  c.true_path = StatePath(9, 0);
  CHECK_THROWS_AS(c.check(2, 10), Error);
}

TEST_CASE("a true path with zero likelihood is rejected") {
  const auto spec = protein_model().spec;
  const auto data = sample(spec, 30, 3);
  RefinementConfig c;
  c.delta = 0.1;
  c.mode = ReplacementMode::peeping;
  StatePath bad = data.states;
  bad[10] = 2;
  bad[11] = 4;  // 3 -> 5 is forbidden
  c.true_path = bad;
  CHECK_THROWS_AS(iterative_refine(spec, data.observations, c), Error);
}

TEST_CASE("no iterations when every probability already clears the threshold") {
  const auto spec = gaussian_model();
  const auto data = sample(spec, 200, 1);
  RefinementConfig c;
  c.delta = 1e-9;
  c.max_iterations = 50;
  const auto r = iterative_refine(spec, data.observations, c);
  CHECK(r.trace.steps.empty());
  CHECK(r.trace.stopped_by_threshold);
  CHECK(r.path == viterbi(spec, data.observations));
}

TEST_CASE("iterative refinement replays against the exhaustive oracle") {
  Rng rng(31);
  int with_steps = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto [spec, obs] = instance(rng, 3, 8, trial % 2 == 0, trial % 3 == 0 ? 0.0 : 0.3);
    RefinementConfig c;
    c.delta = trial % 2 ? 0.33 : 0.9;
    c.allow_large_delta = true;
    c.max_iterations = 4;
    const auto r = iterative_refine(spec, obs, c);
    const auto expected = oracle_iterative(spec, obs, c.delta, c.max_iterations);
    REQUIRE(r.trace.steps.size() == expected.size());
    with_steps += !expected.empty();
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(r.trace.steps[i].time == expected[i].time);
      CHECK(r.trace.steps[i].state == expected[i].state);
      CHECK(r.trace.steps[i].path == expected[i].path);
    }
  }
  CHECK(with_steps > 20);
}

TEST_CASE("pinned times report probability one and are never reselected") {
  const auto spec = gaussian_model();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = sample(spec, 500, seed);
    RefinementConfig c;
    c.delta = 0.45;
    c.max_iterations = 40;
    const auto r = iterative_refine(spec, data.observations, c);
    std::set<std::size_t> seen;
    for (const auto& step : r.trace.steps) {
      CHECK(seen.insert(step.time).second);
      for (auto t : seen) CHECK(step.rho[t] == 1.0);
      CHECK(step.path[step.time] == step.state);
    }
  }
}

TEST_CASE("iterative output stays admissible with non-increasing posterior") {
  const auto model = protein_model();
  for (const auto mode : {ReplacementMode::pmap, ReplacementMode::peeping}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto data = sample(model.spec, 1000, seed);
      RefinementConfig c;
      c.delta = 1.0;
      c.allow_large_delta = true;
      c.max_iterations = 40;
      c.mode = mode;
      c.true_path = data.states;
      const auto r = iterative_refine(model.spec, data.observations, c);
      CHECK(r.trace.steps.size() == 40);
      double prev = r.trace.initial_metrics.log_posterior;
      for (const auto& step : r.trace.steps) {
        CHECK(step.metrics.log_posterior > kNegInf);
        CHECK(step.metrics.log_posterior <= prev + 1e-9);
        CHECK(step.metrics.rho_min_cond.has_value());
        prev = step.metrics.log_posterior;
      }
      CHECK(log_likelihood(model.spec, data.observations, r.trace.pins()) > kNegInf);
    }
  }
}

TEST_CASE("threshold stop implies the conditional minimum reaches delta") {
  const auto spec = gaussian_model();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = sample(spec, 1000, seed);
    RefinementConfig c;
    c.delta = 0.3;
    c.max_iterations = 1000;
    const auto r = iterative_refine(spec, data.observations, c);
    REQUIRE(r.trace.stopped_by_threshold);
    const auto& rho = r.trace.steps.empty() ? r.trace.initial_rho : r.trace.steps.back().rho;
    CHECK(*std::min_element(rho.begin(), rho.end()) >= c.delta);
  }
}

TEST_CASE("iteration cap stops the loop") {
  const auto spec = gaussian_model();
  const auto data = sample(spec, 1000, 3);
  RefinementConfig c;
  c.delta = 0.49;
  c.max_iterations = 2;
  const auto r = iterative_refine(spec, data.observations, c);
  CHECK(r.trace.steps.size() == 2);
  CHECK_FALSE(r.trace.stopped_by_threshold);
}

TEST_CASE("bunch with zero count is the unrestricted Viterbi path") {
  const auto spec = gaussian_model();
  const auto data = sample(spec, 300, 2);
  const auto b = bunch_refine(spec, data.observations, CountSelection{0}, ReplacementMode::pmap);
  CHECK(b.path == viterbi(spec, data.observations));
  CHECK(b.pins.empty());
}

TEST_CASE("bunch count selection matches the exhaustive restricted argmax") {
  Rng rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const auto [spec, obs] = instance(rng, 3, 8, trial % 2 == 0, 0.3);
    const auto e = oracle::enumerate(spec, obs);
    const auto smooth = *oracle::smoothing(e, 8, 3);
    const auto v = *oracle::viterbi(e);
    const auto marginal = oracle::pmap(smooth);
    std::vector<std::size_t> order(8);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return smooth(a, v[a]) < smooth(b, v[b]); });
    PinSet pins({{order[0], marginal[order[0]]}, {order[1], marginal[order[1]]}});
    const auto expected = oracle::viterbi(oracle::enumerate(spec, obs, pins));
    const auto b = bunch_refine(spec, obs, CountSelection{2}, ReplacementMode::pmap);
    CHECK(b.admissible == expected.has_value());
    if (expected) CHECK(b.path == *expected);
  }
}

TEST_CASE("peeping bunch is always admissible") {
  const auto spec = protein_model().spec;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = sample(spec, 1000, seed);
    for (std::size_t count : {5, 40, 80}) {
      const auto b = bunch_refine(spec, data.observations, CountSelection{count}, ReplacementMode::peeping, data.states);
      CHECK(b.admissible);
      CHECK(b.metrics.log_posterior > kNegInf);
    }
  }
}

TEST_CASE("recorded seed: bunch PMAP replacement reaches zero posterior") {
  // Seed 2, n = 1000: the 35 lowest-probability positions pinned to their
  // PMAP states admit no path. Found with find_inadmissible_bunch_seed.
  const auto spec = protein_model().spec;
  const auto data = sample(spec, 1000, 2);
  const auto ok = bunch_refine(spec, data.observations, CountSelection{34}, ReplacementMode::pmap, data.states);
  CHECK(ok.admissible);
  const auto bad = bunch_refine(spec, data.observations, CountSelection{35}, ReplacementMode::pmap, data.states);
  CHECK_FALSE(bad.admissible);
  CHECK(bad.metrics.log_posterior == kNegInf);
  CHECK_FALSE(bad.metrics.expected_errors.has_value());
  CHECK_FALSE(bad.metrics.rho_min_cond.has_value());
  REQUIRE(bad.metrics.errors.has_value());
  // The overlay: Viterbi outside the pins, the pinned state on them.
  const auto v = viterbi(spec, data.observations);
  for (std::size_t t = 0; t < v.size(); ++t) CHECK(bad.path[t] == bad.pins.state_at(t).value_or(v[t]));
  CHECK(*bad.metrics.errors == hamming(bad.path, data.states));
}

TEST_CASE("threshold selection pins every position at or below delta") {
  const auto spec = gaussian_model();
  const auto data = sample(spec, 1000, 9);
  const auto post = forward_backward(spec, data.observations);
  const auto rho = classification_probabilities(post, viterbi(spec, data.observations));
  const auto b = bunch_refine(spec, data.observations, ThresholdSelection{0.25}, ReplacementMode::pmap);
  const auto expected = std::count_if(rho.begin(), rho.end(), [](double r) { return r <= 0.25; });
  CHECK(b.pins.size() == static_cast<std::size_t>(expected));
  CHECK_THROWS_AS(bunch_refine(spec, data.observations, ThresholdSelection{0.0}, ReplacementMode::pmap), Error);
  CHECK_THROWS_AS(bunch_refine(spec, data.observations, ThresholdSelection{0.2}, ReplacementMode::peeping), Error);
}

TEST_CASE("metrics: truth has no errors, Viterbi expected errors equal n minus accuracy") {
  const auto spec = gaussian_model();
  const auto data = sample(spec, 400, 12);
  const auto m = compute_metrics(spec, data.observations, data.states, {}, data.states);
  CHECK(m.errors == std::size_t{0});
  const auto v = viterbi(spec, data.observations);
  const auto post = forward_backward(spec, data.observations);
  const auto mv = compute_metrics(spec, data.observations, v, {});
  CHECK_FALSE(mv.errors.has_value());
  CHECK(*mv.expected_errors == doctest::Approx(400.0 - accuracy(post, v)).epsilon(1e-12));
  CHECK(*mv.rho_min_cond == doctest::Approx(mv.rho_min_uncond));
  CHECK(mv.log_posterior == doctest::Approx(path_log_posterior(spec, data.observations, v)));
}

TEST_CASE("metrics: PMAP minimizes expected errors, K = 2, n = 6") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [spec, obs] = instance(rng, 2, 6, trial % 2 == 0, 0.2);
    const double best = *compute_metrics(spec, obs, pmap(spec, obs), {}).expected_errors;
    oracle::for_each_path(6, 2, [&](const StatePath& p) {
      CHECK(*compute_metrics(spec, obs, p, {}).expected_errors >= best - 1e-12);
    });
  }
}

TEST_CASE("hamming distance") {
  CHECK(hamming({0, 1, 2, 1}, {0, 2, 2, 0}) == 2);
  CHECK_THROWS_AS(hamming({0}, {0, 1}), Error);
}
