#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmmseg/bounds.hpp"
#include "hmmseg/experiments.hpp"
#include "oracle.hpp"

using namespace hmmseg;

namespace {

ModelSpec two_state(double e1, double e2) {
  ModelSpec spec;
  spec.transition = Matrix{{1 - e1, e1}, {e2, 1 - e2}};
  spec.initial = stationary_distribution(spec.transition);
  spec.emission = GaussianEmission{{0.0, 1.0}, {1.0, 1.0}};
  return spec;
}

// Small-probability chain with categorical emissions: x (never in state 2),
// y (only in state 2), and z with weight p everywhere.
ModelSpec z_model(double p) {
  ModelSpec spec = small_prob_model();
  spec.emission = CategoricalEmission{{"x", "y", "z"},
                                      Matrix{{1 - p, 0.0, p},  //
                                             {0.0, 1 - p, p},
                                             {1 - p, 0.0, p},
                                             {1 - p, 0.0, p}}};
  return spec;
}

// O(n^2) direct reading of the stopping-time definitions, 1-based.
std::vector<StoppingTimes> naive_stopping_times(const std::vector<std::size_t>& xs, const std::set<std::size_t>& core,
                                                std::size_t r) {
  const std::size_t n = xs.size();
  auto word = [&](std::size_t from, std::size_t to) {  // x_from..x_to, 1-based
    for (std::size_t i = from; i <= to; ++i)
      if (!core.count(xs[i - 1])) return false;
    return true;
  };
  std::vector<StoppingTimes> out(n);
  for (std::size_t t = 1; t <= n; ++t) {
    std::size_t w = n, u = 1;
    for (std::size_t c = t + r + 1; c <= n; ++c)
      if (word(c - r, c)) {
        w = c;
        break;
      }
    for (std::size_t c = 1; c + r + 1 <= t; ++c)
      if (c + r <= n && word(c, c + r)) u = c;
    out[t - 1] = {w, u};
  }
  return out;
}

}  // namespace

TEST_CASE("sigma of the two-state chain") {
  const double e1 = 0.1, e2 = 0.3;
  const auto s = sigma(two_state(e1, e2).transition);
  CHECK(s.sigma1 == doctest::Approx(e1 / (1 - e1)).epsilon(1e-14));
  CHECK(s.sigma2 == doctest::Approx(e1 / (1 - e2)).epsilon(1e-14));
}

TEST_CASE("sigma of uniform rows is one and of a zero entry is zero") {
  const auto u = sigma(Matrix{{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  CHECK(u.sigma1 == doctest::Approx(1.0));
  CHECK(u.sigma2 == doctest::Approx(1.0));
  const auto z = sigma(Matrix{{0.5, 0.5}, {1.0, 0.0}});
  CHECK(z.sigma1 == 0.0);
  CHECK(z.sigma2 == 0.0);
}

TEST_CASE("all bounds equal one half for the fair two-state chain") {
  const auto b = viterbi_bounds(two_state(0.5, 0.5));
  CHECK(b.plain.interior == doctest::Approx(0.5));
  CHECK(b.plain.first == doctest::Approx(0.5));
  CHECK(b.plain.last == doctest::Approx(0.5));
  CHECK(b.initial_support == 2);
}

TEST_CASE("symmetric two-state interior bound") {
  for (double eps : {0.05, 0.2, 0.4}) {
    const auto b = viterbi_bounds(two_state(eps, eps));
    const double e4 = std::pow(eps, 4), f4 = std::pow(1 - eps, 4);
    CHECK(b.plain.interior == doctest::Approx(e4 / (e4 + f4)).epsilon(1e-12));
  }
}

TEST_CASE("a zero transition gives a zero interior bound") {
  ModelSpec spec = two_state(0.2, 0.3);
  spec.transition = Matrix{{1.0, 0.0}, {0.3, 0.7}};
  CHECK(viterbi_bounds(spec).plain.interior == 0.0);
}

TEST_CASE("stationary variant dominates and coincides for reversible or doubly stochastic chains") {
  const auto rev = viterbi_bounds(two_state(0.1, 0.3));
  REQUIRE(rev.stationary);
  CHECK(rev.stationary->interior == doctest::Approx(rev.plain.interior).epsilon(1e-12));

  ModelSpec ds = two_state(0.2, 0.2);
  ds.transition = Matrix{{0.2, 0.3, 0.5}, {0.5, 0.2, 0.3}, {0.3, 0.5, 0.2}};
  ds.initial = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  ds.emission = GaussianEmission{{0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}};
  const auto d = viterbi_bounds(ds);
  CHECK(d.reversed->sigma1 * d.reversed->sigma2 == doctest::Approx(d.forward.sigma1 * d.forward.sigma2));
  CHECK(d.stationary->interior == doctest::Approx(d.plain.interior));

  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    ModelSpec spec = oracle::random_model(rng, 3, true, 0.0);
    spec.initial = stationary_distribution(spec.transition);
    const auto b = viterbi_bounds(spec);
    REQUIRE(b.stationary);
    CHECK(b.stationary->interior >= b.plain.interior - 1e-15);
    if (b.reversed->sigma1 * b.reversed->sigma2 <= b.forward.sigma1 * b.forward.sigma2)
      CHECK(b.stationary->interior == doctest::Approx(b.plain.interior));
  }
}

TEST_CASE("stationary bounds need an irreducible chain") {
  ModelSpec spec = two_state(0.2, 0.2);
  spec.transition = Matrix{{1.0, 0.0}, {0.3, 0.7}};
  CHECK_THROWS_WITH_AS(stationary_bounds(spec), "chain not irreducible", Error);
}

TEST_CASE("iid chain: every Viterbi classification probability is at least one half") {
  const auto spec = two_state(0.5, 0.5);
  const auto data = sample(spec, 200, 4);
  const auto v = verify_bounds(spec, data.observations);
  CHECK(v.violations == 0);
  for (const auto& c : v.checks) {
    CHECK(c.bound == doctest::Approx(0.5));
    CHECK(c.min_observed_rho >= 0.5);
  }
}

TEST_CASE("deterministic start: first bound and first probability are one") {
  ModelSpec spec = two_state(0.2, 0.3);
  spec.initial = {1.0, 0.0};
  const auto b = viterbi_bounds(spec);
  CHECK(b.initial_support == 1);
  CHECK(b.plain.first == 1.0);
  const auto data = sample(spec, 50, 6);
  const auto v = verify_bounds(spec, data.observations);
  CHECK(v.violations == 0);
  for (const auto& c : v.checks)
    if (c.position == BoundCheck::Position::first) CHECK(c.min_observed_rho == doctest::Approx(1.0));
}

TEST_CASE("random positive models never violate the bounds") {
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    const ModelSpec spec = oracle::random_model(rng, 2 + i % 3, i % 2 == 0, 0.0, 3);
    const auto data = sample(spec, 50, Rng::derive(42, i));
    CHECK(verify_bounds(spec, data.observations).violations == 0);
  }
}

TEST_CASE("cluster of the small-probability model has exponent two") {
  const auto spec = small_prob_model();
  const auto c = check_cluster(spec, {0, 1, 2, 3}, {2});
  CHECK(c.valid);
  CHECK(c.exponent == 2);
  // x is impossible in state 2, so it cannot be a core symbol for all states.
  CHECK_FALSE(check_cluster(spec, {0, 1, 2, 3}, {0}).valid);
  // x is emitted outside {1, 3}, violating the exclusivity condition.
  CHECK_FALSE(check_cluster(spec, {0, 2}, {0}).valid);
}

TEST_CASE("positive transitions give exponent one") {
  ModelSpec spec;
  spec.transition = Matrix{{0.6, 0.4}, {0.3, 0.7}};
  spec.initial = {0.5, 0.5};
  spec.emission = CategoricalEmission{{"a", "b"}, Matrix{{0.5, 0.5}, {0.2, 0.8}}};
  const auto c = check_cluster(spec, {0, 1}, {0, 1});
  CHECK(c.valid);
  CHECK(c.exponent == 1);
}

TEST_CASE("a periodic block is not primitive") {
  ModelSpec spec;
  spec.transition = Matrix{{0.0, 0.9, 0.1}, {0.9, 0.0, 0.1}, {0.5, 0.0, 0.5}};
  spec.initial = {0.3, 0.3, 0.4};
  spec.emission = CategoricalEmission{{"a", "b"}, Matrix{{0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}}};
  const auto c = check_cluster(spec, {0, 1}, {1});
  CHECK_FALSE(c.valid);
  CHECK(c.exponent == 0);
  CHECK_THROWS_AS(check_cluster(gaussian_model(), {0}, {0}), Error);
}

TEST_CASE("stopping times without any core word") {
  const auto obs = ObservationSequence::symbols({0, 1, 0, 1, 0, 0, 1});
  for (const auto& st : stopping_times(obs, ClusterSpec{{0}, {2}, 1})) {
    CHECK(st.w == 7);
    CHECK(st.u == 1);
  }
}

TEST_CASE("stopping times when every symbol is core") {
  const std::size_t n = 12, r = 2;
  const auto obs = ObservationSequence::symbols(std::vector<std::size_t>(n, 0));
  const auto st = stopping_times(obs, ClusterSpec{{0}, {0}, r});
  for (std::size_t t = 1; t <= n; ++t) {
    CHECK(st[t - 1].w == std::min(t + r + 1, n));
    CHECK(st[t - 1].u == (t > r + 2 ? t - r - 1 : 1));
  }
}

TEST_CASE("a single core word, r = 1") {
  // Core word at positions 5..6 (1-based).
  const auto obs = ObservationSequence::symbols({0, 0, 0, 0, 1, 1, 0, 0, 0, 0});
  const auto st = stopping_times(obs, ClusterSpec{{0}, {1}, 1});
  const auto naive = naive_stopping_times(obs.symbol_values(), {1}, 1);
  for (std::size_t t = 0; t < 10; ++t) {
    CHECK(st[t].w == naive[t].w);
    CHECK(st[t].u == naive[t].u);
  }
  CHECK(st[0].w == 6);  // t = 1: first w > 2 ending a word
  CHECK(st[4].w == 10);  // t = 5: the word would need to start after 5
  CHECK(st[7].u == 5);  // t = 8: the word starts before 8 - 1
  CHECK(st[5].u == 1);
}

TEST_CASE("stopping times agree with a naive scan on random inputs") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const std::size_t r = static_cast<std::size_t>(rng.uniform() * 4);
    std::vector<std::size_t> xs(n);
    for (auto& x : xs) x = rng.uniform() < 0.7 ? 0 : 1;
    const auto st = stopping_times(ObservationSequence::symbols(xs), ClusterSpec{{0}, {0}, r});
    const auto naive = naive_stopping_times(xs, {0}, r);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(st[t].w == naive[t].w);
      CHECK(st[t].u == naive[t].u);
    }
  }
}

TEST_CASE("tail is zero beyond r + 1 when every symbol is core") {
  ModelSpec spec;
  spec.transition = Matrix{{0.6, 0.4}, {0.3, 0.7}};
  spec.initial = {0.5, 0.5};
  spec.emission = CategoricalEmission{{"a", "b"}, Matrix{{0.5, 0.5}, {0.2, 0.8}}};
  const auto tail = empirical_tail(spec, ClusterSpec{{0, 1}, {0, 1}, 1}, 500, 10, 1);
  CHECK(tail.survival[0] == 1.0);
  CHECK(tail.survival[1] == 1.0);
  CHECK(tail.survival[2] == 0.0);
  CHECK(tail.censored == 0);
  CHECK_FALSE(tail.warning);
}

TEST_CASE("tail matches the absorption probabilities of the word automaton") {
  // z has the same weight in every state, so z-indicators are iid and the
  // waiting time for three consecutive z's is a run-length absorption problem.
  const double p = 0.4;
  const std::size_t r = 2, horizon = 40, samples = 20000;
  const auto spec = z_model(p);
  const ClusterSpec cluster{{0, 1, 2, 3}, {2}, r};
  const auto tail = empirical_tail(spec, cluster, samples, horizon, 2024, 3);

  // progress[j] = P(current run of z's has length j, not yet absorbed).
  std::vector<double> progress(r + 1, 0.0);
  progress[0] = 1.0;
  std::vector<double> survival(horizon + 1);
  survival[0] = 1.0;
  for (std::size_t k = 1; k <= horizon; ++k) {
    std::vector<double> next(r + 1, 0.0);
    for (std::size_t j = 0; j <= r; ++j) {
      next[0] += progress[j] * (1 - p);
      if (j < r) next[j + 1] += progress[j] * p;
    }
    progress = next;
    double s = 0.0;
    for (double x : progress) s += x;
    survival[k] = s;
  }
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double se = std::sqrt(survival[k] * (1 - survival[k]) / samples);
    CHECK(std::abs(tail.survival[k] - survival[k]) <= 5 * se + 1e-3);
  }
  for (std::size_t k = 1; k <= horizon; ++k) CHECK(tail.survival[k] <= tail.survival[k - 1]);
  CHECK(tail.log_slope < 0.0);
}

TEST_CASE("rarely observed clusters raise the warning") {
  const auto tail = empirical_tail(z_model(0.05), ClusterSpec{{0, 1, 2, 3}, {2}, 2}, 200, 20, 5);
  CHECK(tail.warning);
  CHECK(tail.censored > 100);
}
