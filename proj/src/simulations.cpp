#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "hmmseg/experiments.hpp"
#include "hmmseg/logspace.hpp"
#include "hmmseg/rng.hpp"

namespace hmmseg {

namespace {

// Emission probabilities, one row per amino acid (A C D E F G H I
// K L M N P Q R S T V W Y), one column per state. Rounded to 4 decimals.
constexpr double kProteinEmission[20][6] = {
    {0.1059, 0.0636, 0.0643, 0.1036, 0.1230, 0.1230},  // A
    {0.0107, 0.0171, 0.0135, 0.0081, 0.0111, 0.0128},  // C
    {0.0538, 0.0319, 0.0775, 0.0634, 0.0415, 0.0345},  // D
    {0.0973, 0.0477, 0.0620, 0.1120, 0.0852, 0.0848},  // E
    {0.0436, 0.0576, 0.0330, 0.0371, 0.0386, 0.0399},  // F
    {0.0303, 0.0484, 0.1133, 0.0447, 0.0321, 0.0229},  // G
    {0.0203, 0.0227, 0.0259, 0.0188, 0.0197, 0.0221},  // H
    {0.0564, 0.1010, 0.0372, 0.0577, 0.0694, 0.0593},  // I
    {0.0672, 0.0443, 0.0574, 0.0540, 0.0671, 0.0810},  // K
    {0.1227, 0.1068, 0.0674, 0.0994, 0.1279, 0.1477},  // L
    {0.0240, 0.0219, 0.0181, 0.0214, 0.0293, 0.0304},  // M
    {0.0299, 0.0252, 0.0561, 0.0259, 0.0338, 0.0336},  // N
    {0.0333, 0.0208, 0.0757, 0.0472, 0.0067, 0.0031},  // P
    {0.0443, 0.0270, 0.0330, 0.0469, 0.0497, 0.0472},  // Q
    {0.0594, 0.0464, 0.0470, 0.0522, 0.0677, 0.0697},  // R
    {0.0496, 0.0496, 0.0744, 0.0485, 0.0422, 0.0491},  // S
    {0.0395, 0.0641, 0.0572, 0.0465, 0.0412, 0.0375},  // T
    {0.0591, 0.1386, 0.0473, 0.0685, 0.0677, 0.0545},  // V
    {0.0168, 0.0170, 0.0111, 0.0135, 0.0130, 0.0124},  // W
    {0.0359, 0.0483, 0.0286, 0.0306, 0.0331, 0.0345},  // Y
};

constexpr double kRoundedColumnTolerance = 1e-3;

ExperimentRow make_row(Algorithm a, ReplacementMode mode, std::size_t m, Metrics metrics, bool admissible = true) {
  return ExperimentRow{a, mode, m, std::move(metrics), admissible};
}

// Runs fn(i) for i in [0, count) on a small pool; results are written by
// index so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::viterbi: return "viterbi";
    case Algorithm::pmap: return "pmap";
    case Algorithm::bunch: return "bunch";
    case Algorithm::iterative: return "iterative";
  }
  return "?";
}

ProteinModel protein_model() {
  ProteinModel out;
  auto& spec = out.spec;
  spec.transition = Matrix{{0.8360, 0.0034, 0.1606, 0, 0, 0},
                           {0.0022, 0.8282, 0.1668, 0.0028, 0, 0},
                           {0.0175, 0.0763, 0.8607, 0.0455, 0, 0},
                           {0, 0, 0, 0.7500, 0.2271, 0.0229},
                           {0, 0, 0, 0, 0.8450, 0.1550},
                           {0, 0.0018, 0.2481, 0, 0, 0.7501}};
  spec.initial = {0.0016, 0.0041, 0.9929, 0.0014, 0, 0};

  CategoricalEmission e;
  e.symbols = {"A", "C", "D", "E", "F", "G", "H", "I", "K", "L", "M", "N", "P", "Q", "R", "S", "T", "V", "W", "Y"};
  e.probabilities = Matrix(6, 20);
  for (std::size_t s = 0; s < 6; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < 20; ++a) sum += kProteinEmission[a][s];
    if (std::abs(sum - 1.0) > kRoundedColumnTolerance)
      throw Error(fmt::format("protein emission column {} sums to {}", s + 1, sum));
    for (std::size_t a = 0; a < 20; ++a) {
      e.probabilities(s, a) = kProteinEmission[a][s] / sum;
      out.max_adjustment = std::max(out.max_adjustment, std::abs(e.probabilities(s, a) - kProteinEmission[a][s]));
    }
  }
  spec.emission = std::move(e);
  // Row sums of the decimals can miss 1 by an ulp or two.
  for (std::size_t i = 0; i < 6; ++i) {
    auto row = spec.transition.row(i);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& p : row) p /= sum;
  }
  require_valid(spec);
  return out;
}

ProteinExperimentResult run_protein_experiment(const ProteinExperimentConfig& config) {
  const ProteinModel model = protein_model();
  const ModelSpec& spec = model.spec;
  ProteinExperimentResult out;
  out.config = config;
  out.max_adjustment = model.max_adjustment;
  out.data = sample(spec, config.n, config.seed);
  const auto& obs = out.data.observations;
  const auto& truth = out.data.states;

  const Trellis tr(spec, obs);
  const PosteriorTables uncond = forward_backward(tr);
  out.viterbi = make_row(Algorithm::viterbi, ReplacementMode::pmap, 0,
                         compute_metrics(tr, uncond, viterbi(tr), {}, truth));
  const StatePath marginal = pmap(uncond);
  out.pmap = make_row(Algorithm::pmap, ReplacementMode::pmap, 0, compute_metrics(tr, uncond, marginal, {}, truth),
                      log_joint(tr, marginal) != kNegInf);

  const std::size_t max_m =
      config.schedule.empty() ? 0 : *std::max_element(config.schedule.begin(), config.schedule.end());
  for (const auto mode : config.modes) {
    for (const auto m : config.schedule) {
      const auto b = bunch_refine(spec, obs, CountSelection{m}, mode, truth);
      out.rows.push_back(make_row(Algorithm::bunch, mode, m, b.metrics, b.admissible));
    }
    if (max_m == 0) continue;
    RefinementConfig rc;
    rc.delta = 1.0;
    rc.allow_large_delta = true;
    rc.max_iterations = max_m;
    rc.mode = mode;
    rc.true_path = truth;
    const auto it = iterative_refine(spec, obs, rc);
    for (const auto m : config.schedule) {
      if (m == 0) {
        out.rows.push_back(make_row(Algorithm::iterative, mode, 0, it.trace.initial_metrics));
      } else if (m <= it.trace.steps.size()) {
        out.rows.push_back(make_row(Algorithm::iterative, mode, m, it.trace.steps[m - 1].metrics));
      }
    }
  }
  return out;
}

std::optional<InadmissibleBunch> find_inadmissible_bunch_seed(std::uint64_t first_seed, std::size_t max_seeds,
                                                              std::size_t n, double threshold) {
  const ModelSpec spec = protein_model().spec;
  for (std::uint64_t seed = first_seed; seed < first_seed + max_seeds; ++seed) {
    const Sample data = sample(spec, n, seed);
    const Trellis tr(spec, data.observations);
    const PosteriorTables uncond = forward_backward(tr);
    const auto rho = classification_probabilities(uncond, viterbi(tr));
    const StatePath marginal = pmap(uncond);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });
    PinSet pins;
    for (std::size_t c = 0; c < n && rho[order[c]] <= threshold; ++c) {
      pins.add({order[c], marginal[order[c]]});
      if (log_likelihood(tr, pins) == kNegInf) return InadmissibleBunch{seed, c + 1};
    }
  }
  return std::nullopt;
}

ModelSpec gaussian_model() {
  ModelSpec spec;
  spec.transition = Matrix{{0.9, 0.1}, {0.1, 0.9}};
  spec.initial = {0.5, 0.5};
  spec.emission = GaussianEmission{{0.0, 0.5}, {1.0, 1.0}};
  return spec;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

GaussianExperimentResult run_gaussian_experiment(const GaussianExperimentConfig& config) {
  if (config.replicates < 1) throw Error("need at least one replicate");
  if (config.n < 1) throw Error("sequence length must be positive");
  const ModelSpec spec = gaussian_model();
  GaussianExperimentResult out;
  out.config = config;

  std::vector<std::vector<ReplicateRecord>> per_rep(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    const std::uint64_t seed = Rng::derive(config.seed, r);
    const Sample data = sample(spec, config.n, seed);
    const auto& obs = data.observations;
    const auto& truth = data.states;
    const Trellis tr(spec, obs);
    const PosteriorTables uncond = forward_backward(tr);
    auto& recs = per_rep[r];
    recs.push_back({r, seed, 0.0,
                    make_row(Algorithm::viterbi, ReplacementMode::pmap, 0,
                             compute_metrics(tr, uncond, viterbi(tr), {}, truth))});
    recs.push_back({r, seed, 0.0,
                    make_row(Algorithm::pmap, ReplacementMode::pmap, 0,
                             compute_metrics(tr, uncond, pmap(uncond), {}, truth))});
    for (const double delta : config.deltas)
      for (const auto mode : {ReplacementMode::pmap, ReplacementMode::peeping}) {
        const auto b = bunch_refine(spec, obs, ThresholdSelection{delta}, mode, truth);
        recs.push_back({r, seed, delta, make_row(Algorithm::bunch, mode, b.pins.size(), b.metrics, b.admissible)});
        RefinementConfig rc;
        rc.delta = delta;
        rc.max_iterations = config.n;
        rc.mode = mode;
        rc.true_path = truth;
        const auto it = iterative_refine(spec, obs, rc);
        const Metrics& m = it.trace.steps.empty() ? it.trace.initial_metrics : it.trace.steps.back().metrics;
        recs.push_back({r, seed, delta, make_row(Algorithm::iterative, mode, it.trace.steps.size(), m)});
      }
  });
  for (auto& recs : per_rep)
    for (auto& rec : recs) out.records.push_back(std::move(rec));

  // Group key order: baseline rows first, then by delta, algorithm, mode.
  using Key = std::tuple<double, Algorithm, ReplacementMode>;
  std::vector<Key> keys;
  for (const auto& rec : out.records) {
    const Key k{rec.delta, rec.row.algorithm, rec.row.mode};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& [delta, alg, mode] : keys) {
    std::vector<double> reps, errs, exp_errs, rmin_u, rmin_c, logp;
    for (const auto& rec : out.records) {
      if (rec.delta != delta || rec.row.algorithm != alg || rec.row.mode != mode) continue;
      const auto& m = rec.row.metrics;
      reps.push_back(static_cast<double>(rec.row.m));
      if (m.errors) errs.push_back(static_cast<double>(*m.errors));
      if (m.expected_errors) exp_errs.push_back(*m.expected_errors);
      rmin_u.push_back(m.rho_min_uncond);
      if (m.rho_min_cond) rmin_c.push_back(*m.rho_min_cond);
      logp.push_back(m.log_posterior);
    }
    out.summary.push_back({delta, alg, mode, summarize(reps), summarize(errs), summarize(exp_errs),
                           summarize(rmin_u), summarize(rmin_c), summarize(logp)});
  }
  return out;
}

}  // namespace hmmseg
