#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hmmseg/csv.hpp"
#include "hmmseg/model_io.hpp"
#include "hmmseg/reports.hpp"

using namespace hmmseg;

namespace {

struct Inputs {
  std::string model;
  std::string obs;
  std::string truth;
};

ReplacementMode parse_mode(const std::string& s) { return s == "peep" ? ReplacementMode::peeping : ReplacementMode::pmap; }

void emit(const csv::Document& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    csv::write(std::cout, doc);
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(fmt::format("cannot open '{}' for writing", out));
  csv::write(f, doc);
  if (!f) throw Error(fmt::format("write to '{}' failed", out));
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : " ") + csv::real(x);
  return s;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (auto x : xs) s += (s.empty() ? "" : " ") + std::to_string(x);
  return s;
}

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("model", in.model, "model JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("obs", in.obs, "observation file, one value per line")->required()->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viterbi refinement and error bounds for hidden Markov models"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("-o,--out", out, "write CSV here instead of stdout");

  Inputs in;

  auto* decode = app.add_subcommand("decode", "posterior, Viterbi and PMAP decodings");
  add_inputs(decode, in);

  RefinementConfig rc;
  std::string mode = "pmap";
  auto* refine = app.add_subcommand("refine", "iterative Viterbi refinement");
  add_inputs(refine, in);
  refine->add_option("--delta", rc.delta, "classification probability threshold")->required();
  refine->add_option("--max-iter", rc.max_iterations, "iteration cap")->required();
  refine->add_option("--mode", mode, "replacement rule")->check(CLI::IsMember({"pmap", "peep"}));
  refine->add_option("--truth", in.truth, "true state path, 1-based")->check(CLI::ExistingFile);
  refine->add_flag("--allow-large-delta", rc.allow_large_delta, "accept delta of 0.5 or more");

  std::optional<double> bunch_delta;
  std::optional<std::size_t> bunch_count;
  auto* bunch = app.add_subcommand("bunch", "one-shot replacement of low-confidence positions");
  add_inputs(bunch, in);
  auto* bd = bunch->add_option("--delta", bunch_delta, "pin every position with rho <= delta");
  auto* bc = bunch->add_option("--count", bunch_count, "pin this many least confident positions");
  bd->excludes(bc);
  bunch->add_option("--mode", mode, "replacement rule")->check(CLI::IsMember({"pmap", "peep"}));
  bunch->add_option("--truth", in.truth, "true state path, 1-based")->check(CLI::ExistingFile);

  std::string verify;
  auto* bounds = app.add_subcommand("bounds", "lower bounds on Viterbi classification probabilities");
  bounds->add_option("model", in.model, "model JSON file")->required()->check(CLI::ExistingFile);
  bounds->add_option("--verify", verify, "observation file to check the bounds against")->check(CLI::ExistingFile);

  auto* counter = app.add_subcommand("counterexample", "deterministic counterexamples");
  counter->require_subcommand(1);
  std::size_t s2_m = 7;
  auto* s2 = counter->add_subcommand("s2", "Viterbi state with vanishing classification probability");
  s2->add_option("--m", s2_m, "sequence length minus one")->required();
  PeepingConfig pc;
  auto* s4 = counter->add_subcommand("s4", "peeping that lowers expected accuracy");
  s4->add_option("--m", pc.m, "number of observed 2s")->required();
  s4->add_option("--eps", pc.epsilon, "transition parameter")->required();
  s4->add_option("--delta", pc.delta, "emission parameter")->required();

  auto* simulate = app.add_subcommand("simulate", "simulation harnesses");
  simulate->require_subcommand(1);
  ProteinExperimentConfig prc;
  auto* protein = simulate->add_subcommand("protein", "six-state protein model, one sequence");
  protein->add_option("--seed", prc.seed, "RNG seed");
  protein->add_option("--n", prc.n, "sequence length");
  protein->add_option("--schedule", prc.schedule, "replacement counts to tabulate");
  GaussianExperimentConfig gc;
  bool records = false;
  auto* gaussian = simulate->add_subcommand("gaussian", "two-state Gaussian model, many replicates");
  gaussian->add_option("--seed", gc.seed, "RNG seed");
  gaussian->add_option("--replicates", gc.replicates, "number of sequences");
  gaussian->add_option("--n", gc.n, "sequence length");
  gaussian->add_option("--deltas", gc.deltas, "thresholds")->delimiter(',');
  gaussian->add_option("--threads", gc.threads, "worker threads, 0 for all cores");
  gaussian->add_flag("--records", records, "per-replicate rows instead of the summary");

  CLI11_PARSE(app, argc, argv);

  try {
    csv::Document doc;
    if (decode->parsed()) {
      const auto spec = load_model(in.model);
      const auto obs = load_observations(in.obs, spec);
      doc = report::decode(spec, obs, report::header("decode", &spec, std::nullopt, {{"n", std::to_string(obs.size())}}));
    } else if (refine->parsed()) {
      const auto spec = load_model(in.model);
      const auto obs = load_observations(in.obs, spec);
      rc.mode = parse_mode(mode);
      if (!in.truth.empty()) rc.true_path = load_state_path(in.truth, spec.num_states());
      const auto r = iterative_refine(spec, obs, rc);
      doc = report::trace(r.trace, report::header("refine", &spec, std::nullopt,
                                                  {{"n", std::to_string(obs.size())},
                                                   {"delta", csv::real(rc.delta)},
                                                   {"max_iter", std::to_string(rc.max_iterations)},
                                                   {"mode", mode}}));
    } else if (bunch->parsed()) {
      if (!bunch_delta && !bunch_count) throw Error("bunch needs --delta or --count");
      const auto spec = load_model(in.model);
      const auto obs = load_observations(in.obs, spec);
      std::optional<StatePath> truth;
      if (!in.truth.empty()) truth = load_state_path(in.truth, spec.num_states());
      BunchSelection sel = bunch_delta ? BunchSelection{ThresholdSelection{*bunch_delta}}
                                       : BunchSelection{CountSelection{*bunch_count}};
      const auto r = bunch_refine(spec, obs, sel, parse_mode(mode), truth);
      report::Metadata cfg{{"n", std::to_string(obs.size())}, {"mode", mode}};
      if (bunch_delta) cfg.emplace_back("delta", csv::real(*bunch_delta));
      if (bunch_count) cfg.emplace_back("count", std::to_string(*bunch_count));
      doc = report::bunch(r, report::header("bunch", &spec, std::nullopt, cfg));
    } else if (bounds->parsed()) {
      const auto spec = load_model(in.model);
      std::optional<BoundsVerification> v;
      if (!verify.empty()) v = verify_bounds(spec, load_observations(verify, spec));
      doc = report::bounds(viterbi_bounds(spec), v, report::header("bounds", &spec, std::nullopt));
    } else if (s2->parsed()) {
      const auto spec = small_prob_model();
      doc = report::small_prob(counterexample_small_prob(s2_m),
                               report::header("counterexample s2", &spec, std::nullopt, {{"m", std::to_string(s2_m)}}));
    } else if (s4->parsed()) {
      pc.check();
      const auto spec = peeping_model(pc);
      doc = report::peeping(unsuccessful_peeping_report(pc), q_table(pc),
                            report::header("counterexample s4", &spec, std::nullopt,
                                           {{"m", std::to_string(pc.m)},
                                            {"eps", csv::real(pc.epsilon)},
                                            {"delta", csv::real(pc.delta)}}));
    } else if (protein->parsed()) {
      const auto spec = protein_model().spec;
      const auto r = run_protein_experiment(prc);
      doc = report::protein(r, report::header("simulate protein", &spec, prc.seed, {{"n", std::to_string(prc.n)}, {"schedule", join(prc.schedule)}}));
    } else if (gaussian->parsed()) {
      const auto spec = gaussian_model();
      const auto r = run_gaussian_experiment(gc);
      const auto meta = report::header("simulate gaussian", &spec, gc.seed,
                                       {{"replicates", std::to_string(gc.replicates)},
                                        {"n", std::to_string(gc.n)},
                                        {"deltas", join(gc.deltas)}});
      doc = records ? report::gaussian_records(r, meta) : report::gaussian_summary(r, meta);
    }
    emit(doc, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
