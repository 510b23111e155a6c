#include "hmmseg/reports.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "hmmseg/model_io.hpp"

namespace hmmseg::report {

namespace {

std::string label(State s) { return std::to_string(s + 1); }

std::vector<std::string> metric_fields(const Metrics& m) {
  return {csv::integer(m.errors), csv::real(m.expected_errors), csv::real(m.rho_min_cond),
          csv::real(m.rho_min_uncond), csv::real(m.log_posterior)};
}

const std::vector<std::string> kMetricHeader{"errors", "expected_errors", "rho_min_cond", "rho_min_uncond",
                                             "log_posterior"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

Metadata header(const std::string& command, const ModelSpec* spec, std::optional<std::uint64_t> seed,
                Metadata config) {
  Metadata out{{"command", command}};
  if (spec) out.emplace_back("model_hash", model_hash(*spec));
  if (seed) out.emplace_back("seed", std::to_string(*seed));
  for (auto& kv : config) out.push_back(std::move(kv));
  return out;
}

csv::Document decode(const ModelSpec& spec, const ObservationSequence& obs, Metadata meta) {
  const Trellis tr(spec, obs);
  const PosteriorTables post = forward_backward(tr);
  const StatePath v = viterbi(tr);
  const StatePath p = pmap(post);
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("log_likelihood", csv::real(post.log_likelihood));
  doc.metadata.emplace_back("viterbi_log_posterior", csv::real(path_log_posterior(tr, v)));
  doc.metadata.emplace_back("pmap_log_posterior", csv::real(path_log_posterior(tr, p)));
  doc.header = {"t", "state", "probability", "viterbi", "pmap"};
  for (std::size_t t = 0; t < obs.size(); ++t)
    for (State s = 0; s < spec.num_states(); ++s)
      doc.rows.push_back({csv::integer(t + 1), label(s), csv::real(post.smoothing(t, s)), v[t] == s ? "1" : "0",
                          p[t] == s ? "1" : "0"});
  return doc;
}

csv::Document trace(const RefinementTrace& trace, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("stopped_by_threshold", trace.stopped_by_threshold ? "true" : "false");
  doc.header = concat({"m", "t_m", "w_m"}, kMetricHeader);
  doc.rows.push_back(concat({"0", "NA", "NA"}, metric_fields(trace.initial_metrics)));
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    doc.rows.push_back(concat({csv::integer(i + 1), csv::integer(s.time + 1), label(s.state)}, metric_fields(s.metrics)));
  }
  return doc;
}

csv::Document bunch(const BunchResult& result, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("pins", std::to_string(result.pins.size()));
  doc.metadata.emplace_back("admissible", result.admissible ? "true" : "false");
  const auto fields = metric_fields(result.metrics);
  for (std::size_t i = 0; i < kMetricHeader.size(); ++i) doc.metadata.emplace_back(kMetricHeader[i], fields[i]);
  doc.header = {"t", "state", "pinned"};
  for (std::size_t t = 0; t < result.path.size(); ++t)
    doc.rows.push_back({csv::integer(t + 1), label(result.path[t]), result.pins.state_at(t) ? "1" : "0"});
  return doc;
}

csv::Document bounds(const BoundsReport& report, const std::optional<BoundsVerification>& verification,
                     Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("sigma1", csv::real(report.forward.sigma1));
  doc.metadata.emplace_back("sigma2", csv::real(report.forward.sigma2));
  if (report.reversed) {
    doc.metadata.emplace_back("sigma1_reversed", csv::real(report.reversed->sigma1));
    doc.metadata.emplace_back("sigma2_reversed", csv::real(report.reversed->sigma2));
  }
  doc.header = {"position_class", "bound", "min_observed_rho", "margin", "variant"};
  auto add = [&](const char* variant, const EndpointBounds& b) {
    for (auto pos : {BoundCheck::Position::first, BoundCheck::Position::interior, BoundCheck::Position::last}) {
      const double bound = pos == BoundCheck::Position::first      ? b.first
                           : pos == BoundCheck::Position::interior ? b.interior
                                                                   : b.last;
      std::optional<double> observed, margin;
      if (verification)
        for (const auto& c : verification->checks)
          if (c.position == pos && c.bound == bound) {
            observed = c.min_observed_rho;
            margin = c.margin;
          }
      doc.rows.push_back({to_string(pos), csv::real(bound), csv::real(observed), csv::real(margin), variant});
    }
  };
  add("plain", report.plain);
  if (report.stationary) add("stationary", *report.stationary);
  if (verification) {
    doc.metadata.emplace_back("violations", std::to_string(verification->violations));
    doc.metadata.emplace_back("used_stationary_variant", verification->used_stationary_variant ? "true" : "false");
  }
  return doc;
}

csv::Document small_prob(const SmallProbReport& r, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("classification_probability", csv::real(r.classification_probability));
  doc.metadata.emplace_back("closed_form", csv::real(r.closed_form));
  doc.header = {"t", "viterbi"};
  for (State s = 0; s < r.tables.num_states(); ++s) doc.header.push_back("p_" + label(s));
  for (std::size_t t = 0; t < r.viterbi.size(); ++t) {
    std::vector<std::string> row{csv::integer(t + 1), label(r.viterbi[t])};
    for (State s = 0; s < r.tables.num_states(); ++s) row.push_back(csv::real(r.tables.smoothing(t, s)));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

csv::Document peeping(const PeepingReport& r, const Matrix& q, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  auto put = [&](const char* k, double v) { doc.metadata.emplace_back(k, csv::real(v)); };
  put("sum_q1", r.sum_q1);
  put("one_plus_sum_q2", r.one_plus_sum_q2);
  doc.metadata.emplace_back("peeping_harmful", r.peeping_harmful ? "true" : "false");
  doc.metadata.emplace_back("viterbi_all_ones", r.viterbi_all_ones ? "true" : "false");
  doc.metadata.emplace_back("restricted_as_expected", r.restricted_as_expected ? "true" : "false");
  put("prob_pinned_state", r.prob_pinned_state);
  put("limit", r.limit);
  put("accuracy_viterbi", r.accuracy_viterbi);
  put("accuracy_after_peeping", r.accuracy_after_peeping);
  put("max_q_discrepancy", r.max_q_discrepancy);
  doc.header = {"t", "viterbi", "restricted", "q_1", "q_2", "q_3"};
  for (std::size_t t = 0; t < q.rows(); ++t)
    doc.rows.push_back({csv::integer(t + 1), label(r.viterbi[t]), label(r.restricted[t]), csv::real(q(t, 0)),
                        csv::real(q(t, 1)), csv::real(q(t, 2))});
  return doc;
}

csv::Document protein(const ProteinExperimentResult& r, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.metadata.emplace_back("emission_max_adjustment", csv::real(r.max_adjustment));
  doc.header = concat({"algorithm", "mode", "m"}, kMetricHeader);
  doc.header.push_back("admissible");
  auto add = [&](const ExperimentRow& row, bool with_mode) {
    auto fields = concat({to_string(row.algorithm), with_mode ? to_string(row.mode) : "NA", csv::integer(row.m)},
                         metric_fields(row.metrics));
    fields.push_back(row.admissible ? "true" : "false");
    doc.rows.push_back(std::move(fields));
  };
  add(r.viterbi, false);
  add(r.pmap, false);
  for (const auto& row : r.rows) add(row, true);
  return doc;
}

csv::Document gaussian_summary(const GaussianExperimentResult& r, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.header = {"delta", "algorithm", "mode"};
  for (const char* name :
       {"replacements", "errors", "expected_errors", "rho_min_uncond", "rho_min_cond", "log_posterior"}) {
    doc.header.push_back(std::string(name) + "_mean");
    doc.header.push_back(std::string(name) + "_sd");
  }
  doc.header.push_back("count");
  for (const auto& s : r.summary) {
    const bool baseline = s.algorithm == Algorithm::viterbi || s.algorithm == Algorithm::pmap;
    std::vector<std::string> row{baseline ? "NA" : csv::real(s.delta), to_string(s.algorithm),
                                 baseline ? "NA" : to_string(s.mode)};
    for (const Summary* x : {&s.replacements, &s.errors, &s.expected_errors, &s.rho_min_uncond, &s.rho_min_cond,
                             &s.log_posterior}) {
      row.push_back(x->count ? csv::real(x->mean) : "NA");
      row.push_back(x->count > 1 ? csv::real(x->sd) : "NA");
    }
    row.push_back(csv::integer(s.replacements.count));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

csv::Document gaussian_records(const GaussianExperimentResult& r, Metadata meta) {
  csv::Document doc;
  doc.metadata = std::move(meta);
  doc.header = concat({"replicate", "seed", "delta", "algorithm", "mode", "m"}, kMetricHeader);
  doc.header.push_back("admissible");
  for (const auto& rec : r.records) {
    const bool baseline = rec.row.algorithm == Algorithm::viterbi || rec.row.algorithm == Algorithm::pmap;
    auto row = concat({csv::integer(rec.replicate), std::to_string(rec.seed), baseline ? "NA" : csv::real(rec.delta),
                       to_string(rec.row.algorithm), baseline ? "NA" : to_string(rec.row.mode),
                       csv::integer(rec.row.m)},
                      metric_fields(rec.row.metrics));
    row.push_back(rec.row.admissible ? "true" : "false");
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

}  // namespace hmmseg::report
