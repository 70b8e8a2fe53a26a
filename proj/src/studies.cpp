#include "ahb/studies.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/random.hpp"

namespace ahb {

PredictorKind parse_predictor_kind(const std::string& name) {
  if (name == "builtin") return PredictorKind::kBuiltin;
  if (name == "oracle") return PredictorKind::kOracle;
  throw ConfigError("unknown study predictor '" + name + "' (expected builtin or oracle)");
}

std::string to_string(PredictorKind kind) {
  return kind == PredictorKind::kBuiltin ? "builtin" : "oracle";
}

namespace {

const int kSweep[] = {1, 3, 5, 7, 10};

struct Replicate {
  Splits splits;
  SimTruth test_truth;
  std::unique_ptr<OutcomeModel> model;
};

Replicate prepare(const Scenario& scenario, const StudyCommon& common, int r) {
  const std::uint64_t root = common.seed + static_cast<std::uint64_t>(r);
  DgpConfig dgp = scenario.dgp;
  dgp.seed = derive_seed(root, "simulation");
  Simulated sim = generate(dgp);
  Replicate rep;
  rep.splits = split(sim.data, SplitSpec{common.train_fraction, 0.0, derive_seed(root, "split")});
  rep.test_truth = sim.truth.for_units(sim.data, rep.splits.test);
  if (common.predictor == PredictorKind::kOracle) {
    rep.model = oracle_model(sim.truth.functions);
  } else {
    EnsembleConfig ensemble = common.ensemble;
    ensemble.seed = derive_seed(root, "predictor");
    rep.model = fit_builtin(rep.splits.train, ensemble);
  }
  return rep;
}

bool is_solver(const std::string& method) { return method == "mip" || method == "fast"; }

bool is_sweep(const std::string& method) {
  return method == "mahal_nn" || method == "prognostic_nn" || method == "best_cf";
}

std::vector<UnitEstimate> ahb_estimates(const Dataset& test, const OutcomeModel& model,
                                        MatchOptions options, const StudyCommon& common) {
  const auto results = match_all(test, model, options, common.workers);
  std::vector<UnitResult> treated;
  for (const auto& r : results) {
    if (test.treated(r.unit)) treated.push_back(r);
  }
  return estimate_all(test, treated, common.variant);
}

StudyRow evaluate(const std::string& scenario, const std::string& method, int replicate,
                  const Replicate& rep, const StudyCommon& common, const Baseline* baseline) {
  StudyRow row;
  row.scenario = scenario;
  row.method = method;
  row.replicate = replicate;
  const Dataset& test = rep.splits.test;
  try {
    std::vector<UnitEstimate> estimates;
    if (baseline) {
      estimates = baseline_estimates(*baseline, test, rep.model.get(), &rep.test_truth);
    } else {
      MatchOptions options = common.ahb;
      options.solver = parse_solver(method);
      estimates = ahb_estimates(test, *rep.model, options, common);
    }
    row.metric = evaluate_mae_att(estimates, test, rep.test_truth);
  } catch (const Error& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd};
}

std::vector<double> successful_values(const std::vector<StudyRow>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (!r.failed) v.push_back(r.metric.value);
  }
  return v;
}

}  // namespace

void validate_study_methods(const std::vector<std::string>& methods) {
  if (methods.empty()) throw ConfigError("no methods requested");
  for (const auto& m : methods) {
    if (is_solver(m) || is_sweep(m)) continue;
    parse_baseline(m);
  }
}

StudyResult run_simulation_study(const StudyConfig& config) {
  validate_study_methods(config.methods);
  if (config.common.replicates < 1) throw ConfigError("replicates must be positive");
  if (config.scenarios.empty()) throw ConfigError("no scenarios given");
  for (const auto& s : config.scenarios) dgp_layout(s.dgp);

  StudyResult result;
  for (const auto& scenario : config.scenarios) {
    // rows[method][variant] across replicates; a variant is one k of a sweep.
    std::map<std::string, std::vector<std::vector<StudyRow>>> rows;
    for (int r = 0; r < config.common.replicates; ++r) {
      const Replicate rep = prepare(scenario, config.common, r);
      for (const auto& method : config.methods) {
        auto& slots = rows[method];
        if (is_solver(method)) {
          slots.resize(1);
          slots[0].push_back(evaluate(scenario.name, method, r, rep, config.common, nullptr));
        } else if (is_sweep(method)) {
          slots.resize(std::size(kSweep));
          for (std::size_t v = 0; v < std::size(kSweep); ++v) {
            const Baseline b = parse_baseline(method + ":" + std::to_string(kSweep[v]));
            StudyRow row = evaluate(scenario.name, method, r, rep, config.common, &b);
            row.param = "k=" + std::to_string(kSweep[v]);
            slots[v].push_back(std::move(row));
          }
        } else {
          slots.resize(1);
          const Baseline b = parse_baseline(method);
          slots[0].push_back(evaluate(scenario.name, method, r, rep, config.common, &b));
        }
      }
    }
    for (const auto& method : config.methods) {
      const auto& slots = rows[method];
      std::size_t best = 0;
      double best_mean = 0.0;
      bool have = false;
      for (std::size_t v = 0; v < slots.size(); ++v) {
        const auto values = successful_values(slots[v]);
        if (values.empty()) continue;
        const double m = mean_sd(values).first;
        if (!have || m < best_mean) {
          best = v;
          best_mean = m;
          have = true;
        }
      }
      const auto& chosen = slots[best];
      result.rows.insert(result.rows.end(), chosen.begin(), chosen.end());
      const auto values = successful_values(chosen);
      const auto [mean, sd] = mean_sd(values);
      result.summary.push_back(StudySummary{scenario.name, method,
                                            chosen.empty() ? "" : chosen.front().param, mean, sd,
                                            static_cast<int>(values.size())});
    }
  }
  return result;
}

void write_study_rows(std::ostream& out, const StudyResult& result) {
  csv::write_row(out, {"scenario", "method", "param", "replicate", "mae_over_att", "mae",
                       "true_att", "att_is_zero", "n_used", "n_excluded", "error"});
  for (const auto& r : result.rows) {
    if (r.failed) {
      csv::write_row(out, {r.scenario, r.method, r.param, std::to_string(r.replicate), "", "", "",
                           "", "", "", r.error});
      continue;
    }
    csv::write_row(out, {r.scenario, r.method, r.param, std::to_string(r.replicate),
                         csv::format_number(r.metric.value), csv::format_number(r.metric.mae),
                         csv::format_number(r.metric.true_att),
                         r.metric.att_is_zero ? "true" : "false", std::to_string(r.metric.n_used),
                         std::to_string(r.metric.n_excluded), ""});
  }
}

void write_study_summary(std::ostream& out, const StudyResult& result) {
  csv::write_row(out, {"scenario", "method", "param", "mean", "sd", "replicates"});
  for (const auto& s : result.summary) {
    auto num = [](double v) { return std::isnan(v) ? std::string() : csv::format_number(v); };
    csv::write_row(out, {s.scenario, s.method, s.param, num(s.mean), num(s.sd),
                         std::to_string(s.replicates)});
  }
}

CoverageTally::CoverageTally(std::vector<IntervalMethod> methods)
    : methods_(std::move(methods)), counts_(methods_.size()) {}

CoverageTally::Counts& CoverageTally::at(IntervalMethod method) {
  const auto it = std::find(methods_.begin(), methods_.end(), method);
  if (it == methods_.end()) throw ConfigError("method " + to_string(method) + " is not tallied");
  return counts_[static_cast<std::size_t>(it - methods_.begin())];
}

void CoverageTally::add(IntervalMethod method, double lower, double upper, double truth) {
  Counts& c = at(method);
  c.covered += (lower <= truth && truth <= upper) ? 1 : 0;
  c.width += upper - lower;
  ++c.count;
}

void CoverageTally::skip(IntervalMethod method) { ++at(method).skipped; }

std::vector<CoverageRow> CoverageTally::rows(const std::string& setting) const {
  std::vector<CoverageRow> rows;
  for (std::size_t m = 0; m < methods_.size(); ++m) {
    const Counts& c = counts_[m];
    CoverageRow row;
    row.setting = setting;
    row.method = to_string(methods_[m]);
    row.n_intervals = c.count;
    row.n_skipped = c.skipped;
    if (c.count > 0) {
      row.coverage = static_cast<double>(c.covered) / static_cast<double>(c.count);
      row.mean_width = c.width / static_cast<double>(c.count);
    } else {
      row.coverage = std::nan("");
      row.mean_width = std::nan("");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<CoverageRow> run_coverage_study(const CoverageConfig& config) {
  if (config.methods.empty()) throw ConfigError("no interval methods requested");
  if (config.common.replicates < 1) throw ConfigError("replicates must be positive");
  if (!(config.level > 0.0 && config.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  dgp_layout(config.scenario.dgp);

  CoverageTally tally(config.methods);
  const double variance = config.scenario.dgp.sigma * config.scenario.dgp.sigma;
  for (int r = 0; r < config.common.replicates; ++r) {
    const Replicate rep = prepare(config.scenario, config.common, r);
    const Dataset& test = rep.splits.test;
    const auto results = match_all(test, *rep.model, config.common.ahb, config.common.workers);
    ResamplingConfig resampling = config.resampling;
    resampling.seed = derive_seed(config.common.seed + static_cast<std::uint64_t>(r), "resampling");
    for (const auto& res : results) {
      if (!res.ok() || !test.treated(res.unit)) continue;
      IntervalInputs inputs;
      inputs.group = &res.solution->group;
      inputs.test = &test;
      inputs.model = rep.model.get();
      inputs.variant = config.common.variant;
      inputs.resampling = resampling;
      inputs.true_variance = variance;
      for (auto method : config.methods) {
        try {
          const auto e = interval(res.unit, method, config.level, inputs);
          tally.add(method, e.lower, e.upper, rep.test_truth.h[res.unit]);
        } catch (const ValidationError&) {
          tally.skip(method);
        }
      }
    }
  }
  return tally.rows(config.scenario.name);
}

void write_coverage_report(std::ostream& out, const std::vector<CoverageRow>& rows) {
  csv::write_row(out, {"setting", "method", "coverage", "mean_width", "n_intervals", "n_skipped"});
  for (const auto& r : rows) {
    auto num = [](double v) { return std::isnan(v) ? std::string() : csv::format_number(v); };
    csv::write_row(out, {r.setting, r.method, num(r.coverage), num(r.mean_width),
                         std::to_string(r.n_intervals), std::to_string(r.n_skipped)});
  }
}

}  // namespace ahb
