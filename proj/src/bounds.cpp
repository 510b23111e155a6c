#include "hmmseg/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hmmseg/inference.hpp"
#include "hmmseg/rng.hpp"

namespace hmmseg {

namespace {

// a / (a + others), with a lone candidate state classified with certainty.
double share(double a, std::size_t others) {
  if (others == 0) return 1.0;
  return a / (a + static_cast<double>(others));
}

bool is_stationary(const ModelSpec& spec) {
  const std::size_t k = spec.num_states();
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += spec.initial[i] * spec.transition(i, j);
    if (std::abs(acc - spec.initial[j]) > 1e-12) return false;
  }
  return true;
}

const Matrix& table_of(const EmissionModel& e) {
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) return c->probabilities;
  if (const auto* a = std::get_if<AbstractEmission>(&e)) return a->densities;
  throw Error("cluster detection needs a table emission model");
}

}  // namespace

SigmaPair sigma(const Matrix& p) {
  const std::size_t k = p.rows();
  SigmaPair out{1.0, 1.0};
  for (std::size_t s = 0; s < k; ++s) {
    double rmin = p(s, 0), rmax = p(s, 0), cmin = p(0, s), cmax = p(0, s);
    for (std::size_t t = 1; t < k; ++t) {
      rmin = std::min(rmin, p(s, t));
      rmax = std::max(rmax, p(s, t));
      cmin = std::min(cmin, p(t, s));
      cmax = std::max(cmax, p(t, s));
    }
    out.sigma1 = std::min(out.sigma1, rmax > 0.0 ? rmin / rmax : 0.0);
    out.sigma2 = std::min(out.sigma2, cmax > 0.0 ? cmin / cmax : 0.0);
  }
  return out;
}

BoundsReport viterbi_bounds(const ModelSpec& spec) {
  const std::size_t k = spec.num_states();
  BoundsReport r;
  r.forward = sigma(spec.transition);
  // Exact zero test: model files carry exact zeros.
  r.initial_support = static_cast<std::size_t>(
      std::count_if(spec.initial.begin(), spec.initial.end(), [](double p) { return p != 0.0; }));
  const double s1 = r.forward.sigma1, s2 = r.forward.sigma2;
  r.plain.interior = share(s1 * s1 * s2 * s2, k - 1);
  r.plain.first = share(s1 * s1, r.initial_support - 1);
  r.plain.last = share(s2 * s2, k - 1);
  if (is_irreducible(spec.transition)) {
    r.reversed = sigma(reverse_chain(spec.transition));
    r.stationary = stationary_bounds(spec);
  }
  return r;
}

EndpointBounds stationary_bounds(const ModelSpec& spec) {
  if (!is_irreducible(spec.transition)) throw Error("chain not irreducible");
  const std::size_t k = spec.num_states();
  const SigmaPair f = sigma(spec.transition);
  const SigmaPair b = sigma(reverse_chain(spec.transition));
  const double prod = std::max(f.sigma1 * f.sigma2, b.sigma1 * b.sigma2);
  const double head = std::max(f.sigma1, b.sigma2);
  const double tail = std::max(f.sigma2, b.sigma1);
  return {share(prod * prod, k - 1), share(head * head, k - 1), share(tail * tail, k - 1)};
}

const char* to_string(BoundCheck::Position p) {
  switch (p) {
    case BoundCheck::Position::first: return "first";
    case BoundCheck::Position::interior: return "interior";
    case BoundCheck::Position::last: return "last";
  }
  return "?";
}

BoundsVerification verify_bounds(const ModelSpec& spec, const ObservationSequence& obs) {
  constexpr double kRoundingSlack = 1e-12;
  const Trellis tr(spec, obs);
  const auto rho = classification_probabilities(forward_backward(tr), viterbi(tr));
  const BoundsReport report = viterbi_bounds(spec);

  BoundsVerification out;
  EndpointBounds b = report.plain;
  if (report.stationary && is_stationary(spec)) {
    b = *report.stationary;
    out.used_stationary_variant = true;
  }

  const std::size_t n = rho.size();
  auto add = [&](BoundCheck::Position pos, double bound, std::size_t from, std::size_t to) {
    if (from >= to) return;
    double lo = rho[from];
    for (std::size_t t = from; t < to; ++t) {
      lo = std::min(lo, rho[t]);
      if (rho[t] < bound - kRoundingSlack) ++out.violations;
    }
    out.checks.push_back({pos, bound, lo, lo - bound});
  };
  add(BoundCheck::Position::first, b.first, 0, 1);
  if (n >= 2) {
    add(BoundCheck::Position::interior, b.interior, 1, n - 1);
    add(BoundCheck::Position::last, b.last, n - 1, n);
  }
  out.worst_margin = out.checks.front().margin;
  for (const auto& c : out.checks) out.worst_margin = std::min(out.worst_margin, c.margin);
  return out;
}

ClusterCheck check_cluster(const ModelSpec& spec, const std::set<State>& states, const std::set<std::size_t>& core) {
  const Matrix& table = table_of(spec.emission);
  const std::size_t k = spec.num_states();
  if (states.empty() || core.empty()) return {};
  for (auto s : states)
    if (s >= k) throw Error(fmt::format("cluster state {} out of range", s + 1));
  for (auto x : core) {
    if (x >= table.cols()) throw Error(fmt::format("core symbol {} out of range", x + 1));
    for (std::size_t s = 0; s < k; ++s) {
      const bool inside = states.count(s) > 0;
      if (inside && !(table(s, x) > 0.0)) return {};
      if (!inside && table(s, x) != 0.0) return {};
    }
  }

  const std::vector<State> idx(states.begin(), states.end());
  const std::size_t c = idx.size();
  std::vector<std::vector<bool>> support(c, std::vector<bool>(c));
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) support[i][j] = spec.transition(idx[i], idx[j]) > 0.0;

  const std::size_t wielandt = (c - 1) * (c - 1) + 1;
  auto power = support;
  for (std::size_t r = 1; r <= wielandt; ++r) {
    bool positive = true;
    for (const auto& row : power)
      positive = positive && std::all_of(row.begin(), row.end(), [](bool b) { return b; });
    if (positive) return {true, r};
    std::vector<std::vector<bool>> next(c, std::vector<bool>(c, false));
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t m = 0; m < c; ++m)
        if (power[i][m])
          for (std::size_t j = 0; j < c; ++j) next[i][j] = next[i][j] || support[m][j];
    power = std::move(next);
  }
  return {};
}

std::vector<StoppingTimes> stopping_times(const ObservationSequence& obs, const ClusterSpec& cluster) {
  if (!obs.is_symbolic()) throw Error("stopping times need symbolic observations");
  const auto& xs = obs.symbol_values();
  const std::size_t n = xs.size();
  const std::size_t r = cluster.primitivity_exponent;

  // word_end[w] (1-based): x_{w-r}^w lies entirely in the core.
  std::vector<bool> word_end(n + 2, false);
  std::size_t run = 0;
  for (std::size_t w = 1; w <= n; ++w) {
    run = cluster.core.count(xs[w - 1]) ? run + 1 : 0;
    word_end[w] = run >= r + 1;
  }
  // next_end[i]: smallest w >= i with word_end[w], or 0.
  std::vector<std::size_t> next_end(n + 2, 0);
  for (std::size_t w = n; w >= 1; --w) next_end[w] = word_end[w] ? w : next_end[w + 1];
  // prev_start[i]: largest u <= i whose word x_u^{u+r} is fully core, or 0.
  std::vector<std::size_t> prev_start(n + 1, 0);
  for (std::size_t u = 1; u <= n; ++u) {
    const bool starts = u + r <= n && word_end[u + r];
    prev_start[u] = starts ? u : prev_start[u - 1];
  }

  std::vector<StoppingTimes> out(n);
  for (std::size_t t = 1; t <= n; ++t) {
    const std::size_t from = t + r + 1;
    const std::size_t w = from <= n ? next_end[from] : 0;
    const std::size_t u = t > r + 1 ? prev_start[t - r - 1] : 0;
    out[t - 1] = {w == 0 ? n : w, u == 0 ? 1 : u};
  }
  return out;
}

TailEstimate empirical_tail(const ModelSpec& spec, const ClusterSpec& cluster, std::size_t samples,
                            std::size_t horizon, std::uint64_t seed, std::size_t t) {
  if (samples == 0) throw Error("need at least one sample");
  if (t == 0) throw Error("t is 1-based");
  const std::size_t r = cluster.primitivity_exponent;
  const std::size_t length = t + horizon;
  std::vector<std::size_t> exceed(horizon + 1, 0);
  TailEstimate out;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto draw = sample(spec, length, Rng::derive(seed, i));
    const auto& xs = draw.observations.symbol_values();
    // Words must start after t, so the run restarts at t + 1.
    std::size_t run = 0, gap = horizon + 1;
    for (std::size_t w = t + 1; w <= length; ++w) {
      run = cluster.core.count(xs[w - 1]) ? run + 1 : 0;
      if (run >= r + 1) {
        gap = w - t;
        break;
      }
    }
    if (gap > horizon) ++out.censored;
    for (std::size_t k = 0; k <= horizon && k < gap; ++k) ++exceed[k];
  }
  out.survival.resize(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k)
    out.survival[k] = static_cast<double>(exceed[k]) / static_cast<double>(samples);
  out.warning = 2 * out.censored > samples;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    if (!(out.survival[k] > 0.0)) continue;
    const double x = static_cast<double>(k), y = std::log(out.survival[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  if (m >= 2) {
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (denom != 0.0) out.log_slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
  }
  return out;
}

}  // namespace hmmseg
