#include "hmmseg/model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "hmmseg/logspace.hpp"
#include "hmmseg/rng.hpp"

namespace hmmseg {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kStationaryResidual = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_table(const Matrix& table, std::size_t k, std::size_t alphabet, bool rows_sum_to_one,
                 const char* what, ValidationReport& report) {
  if (table.rows() != k || table.cols() != alphabet) {
    report.push_back(fmt::format("{} table must be {}x{}, got {}x{}", what, k, alphabet, table.rows(),
                                 table.cols()));
    return;
  }
  for (std::size_t s = 0; s < k; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < alphabet; ++a) {
      const double v = table(s, a);
      if (!std::isfinite(v) || v < 0.0)
        report.push_back(fmt::format("{} entry ({}, {}) must be finite and nonnegative", what, s + 1, a + 1));
      sum += v;
    }
    if (rows_sum_to_one && std::abs(sum - 1.0) > kSumTolerance)
      report.push_back(fmt::format("{} row {} not stochastic (sum {:.17g})", what, s + 1, sum));
  }
}

double stationary_residual(const Matrix& p, const std::vector<double>& pi) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) acc += pi[i] * p(i, j);
    worst = std::max(worst, std::abs(acc - pi[j]));
  }
  return worst;
}

// Solves A x = b with partial pivoting; throws on a singular system.
std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t k = b.size();
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-300) throw Error("chain not irreducible: singular stationary system");
    if (pivot != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(k);
  for (std::size_t i = k; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < k; ++c) acc -= a(i, c) * x[c];
    x[i] = acc / a(i, i);
  }
  return x;
}

void normalize(std::vector<double>& v) {
  for (double& x : v) x = std::max(x, 0.0);
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= total;
}

}  // namespace

std::size_t ObservationSequence::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

bool is_table_emission(const EmissionModel& emission) {
  return !std::holds_alternative<GaussianEmission>(emission);
}

bool is_generative(const EmissionModel& emission) {
  return !std::holds_alternative<AbstractEmission>(emission);
}

const std::vector<std::string>& symbol_names(const EmissionModel& emission) {
  if (const auto* c = std::get_if<CategoricalEmission>(&emission)) return c->symbols;
  if (const auto* a = std::get_if<AbstractEmission>(&emission)) return a->symbols;
  throw Error("gaussian emission has no symbol alphabet");
}

ValidationReport validate(const ModelSpec& spec) {
  ValidationReport report;
  const std::size_t k = spec.num_states();
  if (k < 2) report.push_back(fmt::format("model needs at least 2 states, got {}", k));
  if (spec.transition.rows() != k || spec.transition.cols() != k) {
    report.push_back(fmt::format("transition must be {}x{}, got {}x{}", k, k, spec.transition.rows(),
                                 spec.transition.cols()));
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double p = spec.transition(i, j);
        if (!std::isfinite(p) || p < 0.0)
          report.push_back(fmt::format("transition entry ({}, {}) must be a probability", i + 1, j + 1));
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSumTolerance) report.push_back(fmt::format("row {} not stochastic", i + 1));
    }
  }
  double init_sum = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    if (!std::isfinite(spec.initial[s]) || spec.initial[s] < 0.0)
      report.push_back(fmt::format("initial entry {} must be a probability", s + 1));
    init_sum += spec.initial[s];
  }
  if (k > 0 && std::abs(init_sum - 1.0) > kSumTolerance)
    report.push_back("initial distribution does not sum to 1");

  std::visit(overloaded{
                 [&](const CategoricalEmission& e) {
                   check_table(e.probabilities, k, e.symbols.size(), true, "emission", report);
                   if (e.symbols.empty()) report.push_back("emission alphabet is empty");
                 },
                 [&](const AbstractEmission& e) {
                   check_table(e.densities, k, e.symbols.size(), false, "density", report);
                   if (e.symbols.empty()) report.push_back("emission alphabet is empty");
                 },
                 [&](const GaussianEmission& e) {
                   if (e.means.size() != k || e.variances.size() != k)
                     report.push_back(fmt::format("gaussian emission needs {} means and variances", k));
                   for (std::size_t s = 0; s < e.variances.size(); ++s)
                     if (!(e.variances[s] > 0.0) || !std::isfinite(e.variances[s]))
                       report.push_back(fmt::format("state {}: variance must be positive", s + 1));
                   for (std::size_t s = 0; s < e.means.size(); ++s)
                     if (!std::isfinite(e.means[s]))
                       report.push_back(fmt::format("state {}: mean must be finite", s + 1));
                 },
             },
             spec.emission);
  return report;
}

void require_valid(const ModelSpec& spec) {
  const auto report = validate(spec);
  if (report.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& r : report) msg += "\n  " + r;
  throw Error(msg);
}

bool is_irreducible(const Matrix& transition) {
  const std::size_t k = transition.rows();
  if (k == 0 || transition.cols() != k) return false;
  auto reaches_all = [&](bool reversed) {
    std::vector<bool> seen(k, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < k; ++j) {
        const double p = reversed ? transition(j, i) : transition(i, j);
        if (p > 0.0 && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return reaches_all(false) && reaches_all(true);
}

std::vector<double> stationary_distribution(const Matrix& transition) {
  if (!is_irreducible(transition)) throw Error("chain not irreducible");
  const std::size_t k = transition.rows();
  // (P' - I) pi = 0 with the last balance equation replaced by sum(pi) = 1.
  Matrix a(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) a(i, j) = transition(j, i) - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < k; ++j) a(k - 1, j) = 1.0;
  std::vector<double> b(k, 0.0);
  b[k - 1] = 1.0;
  std::vector<double> pi = solve(std::move(a), std::move(b));
  normalize(pi);

  // Lazy power iteration shares the fixed point and is aperiodic.
  for (int it = 0; it < 10000 && stationary_residual(transition, pi) > kStationaryResidual; ++it) {
    std::vector<double> next(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) next[j] += pi[i] * transition(i, j);
    for (std::size_t j = 0; j < k; ++j) next[j] = 0.5 * (next[j] + pi[j]);
    pi = std::move(next);
    normalize(pi);
  }
  if (stationary_residual(transition, pi) > kStationaryResidual)
    throw Error("chain not irreducible: stationary solve did not converge");
  return pi;
}

std::vector<double> stationary_distribution(const ModelSpec& spec) {
  return stationary_distribution(spec.transition);
}

Matrix reverse_chain(const Matrix& transition) {
  const auto pi = stationary_distribution(transition);
  const std::size_t k = pi.size();
  for (double p : pi)
    if (!(p > 0.0)) throw Error("reducible or degenerate chain");
  Matrix q(k, k);
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t t = 0; t < k; ++t) q(s, t) = transition(t, s) * pi[t] / pi[s];
  return q;
}

Matrix reverse_chain(const ModelSpec& spec) { return reverse_chain(spec.transition); }

Matrix emission_log_densities(const ModelSpec& spec, const ObservationSequence& obs) {
  const std::size_t k = spec.num_states();
  const std::size_t n = obs.size();
  Matrix out(n, k);
  auto table_lookup = [&](const std::vector<std::string>& symbols, const Matrix& table) {
    if (!obs.is_symbolic()) throw Error("table emission model needs symbolic observations");
    const auto& xs = obs.symbol_values();
    for (std::size_t t = 0; t < n; ++t) {
      if (xs[t] >= symbols.size())
        throw Error(fmt::format("observation {} is outside the emission alphabet", t + 1));
      for (std::size_t s = 0; s < k; ++s) out(t, s) = safe_log(table(s, xs[t]));
    }
  };
  std::visit(overloaded{
                 [&](const CategoricalEmission& e) { table_lookup(e.symbols, e.probabilities); },
                 [&](const AbstractEmission& e) { table_lookup(e.symbols, e.densities); },
                 [&](const GaussianEmission& e) {
                   if (obs.is_symbolic()) throw Error("gaussian emission model needs real observations");
                   const auto& xs = obs.real_values();
                   const double log_2pi = std::log(2.0 * std::numbers::pi);
                   for (std::size_t t = 0; t < n; ++t)
                     for (std::size_t s = 0; s < k; ++s) {
                       const double d = xs[t] - e.means[s];
                       out(t, s) = -0.5 * (log_2pi + std::log(e.variances[s]) + d * d / e.variances[s]);
                     }
                 },
             },
             spec.emission);
  return out;
}

Sample sample(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample length must be positive");
  if (!is_generative(spec.emission)) throw Error("non-generative emission model");
  require_valid(spec);
  Rng rng(seed);
  Sample out;
  out.states.resize(n);
  out.states[0] = rng.categorical(spec.initial);
  for (std::size_t t = 1; t < n; ++t) out.states[t] = rng.categorical(spec.transition.row(out.states[t - 1]));

  if (const auto* c = std::get_if<CategoricalEmission>(&spec.emission)) {
    std::vector<std::size_t> xs(n);
    for (std::size_t t = 0; t < n; ++t) xs[t] = rng.categorical(c->probabilities.row(out.states[t]));
    out.observations = ObservationSequence::symbols(std::move(xs));
  } else {
    const auto& g = std::get<GaussianEmission>(spec.emission);
    std::vector<double> xs(n);
    for (std::size_t t = 0; t < n; ++t) {
      const State s = out.states[t];
      xs[t] = rng.normal(g.means[s], std::sqrt(g.variances[s]));
    }
    out.observations = ObservationSequence::reals(std::move(xs));
  }
  return out;
}

}  // namespace hmmseg
