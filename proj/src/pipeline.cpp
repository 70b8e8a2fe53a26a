#include "ahb/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"

namespace ahb {

std::size_t MatchRun::n_solved() const {
  std::size_t n = 0;
  for (const auto& r : results) n += r.ok() ? 1 : 0;
  return n;
}

MatchRun run_match(const Dataset& test, const OutcomeModel& model, const MatchRequest& request) {
  if (request.variant) {
    if (!test.has_outcomes()) throw ValidationError("effect estimates need an outcome column");
    if (*request.variant == Variant::kTauB && test.count(Arm::kTreated) == 0) {
      throw ValidationError("tau_b estimates need treated units; the data holds none");
    }
  }
  if (request.verify_oracle && request.options.solver != SolverKind::kMip) {
    throw ConfigError("oracle verification applies to the exact solver only");
  }
  MatchRun run;
  run.options = request.options;
  run.variant = request.variant;
  run.results = match_all(test, model, request.options, request.workers, {},
                          request.trace ? &run.traces : nullptr);

  if (request.verify_oracle) {
    const UnitPredictions predictions = predict_units(model, test);
    bool agree = true;
    for (const auto& r : run.results) {
      bool same = false;
      try {
        const BoxSolution oracle = brute_force_oracle(r.unit, test, predictions, request.options.params);
        same = r.ok() && oracle.objective == r.solution->objective &&
               oracle.group == r.solution->group;
      } catch (const InfeasibleError&) {
        same = !r.ok();
      }
      if (!same) {
        agree = false;
        run.oracle_mismatches.push_back(test.unit_id(r.unit));
      }
    }
    run.oracle_agreement = agree;
  }

  if (request.variant) {
    std::vector<UnitResult> wanted;
    for (const auto& r : run.results) {
      if (*request.variant == Variant::kTauB && !test.treated(r.unit)) continue;
      wanted.push_back(r);
    }
    run.estimates = estimate_all(test, wanted, *request.variant);
  }
  return run;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory '" + path + "': " + ec.message());
}

namespace {

std::ofstream open_output(const std::string& dir, const std::string& name) {
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

std::string join_ids(const MatchedGroup& group, const Dataset& test) {
  std::string out;
  for (auto k : group.members) {
    if (!out.empty()) out += ';';
    out += test.unit_id(k);
  }
  return out;
}

}  // namespace

void write_match_artifacts(const MatchRun& run, const Dataset& test, const std::string& out_dir) {
  ensure_directory(out_dir);
  const std::string solver = to_string(run.options.solver);
  {
    auto out = open_output(out_dir, "boxes.csv");
    write_box_header(out);
    for (const auto& r : run.results) {
      if (r.ok()) write_box_rows(out, r.solution->box, test);
    }
  }
  {
    auto out = open_output(out_dir, "groups.csv");
    csv::write_row(out, {"owner_id", "objective", "optimal", "n_members", "n_controls",
                         "n_treated", "members"});
    for (const auto& r : run.results) {
      if (!r.ok()) continue;
      const auto& s = *r.solution;
      csv::write_row(out, {test.unit_id(r.unit), csv::format_number(s.objective),
                           s.optimal ? "true" : "false", std::to_string(s.group.size()),
                           std::to_string(s.group.n_control), std::to_string(s.group.n_treated),
                           join_ids(s.group, test)});
    }
  }
  {
    auto out = open_output(out_dir, "estimates.csv");
    write_estimates_header(out);
    for (const auto& u : run.estimates) {
      if (u.estimate) write_estimate_row(out, *u.estimate, solver);
    }
  }
  {
    auto out = open_output(out_dir, "errors.csv");
    csv::write_row(out, {"unit_id", "stage", "message"});
    for (const auto& r : run.results) {
      if (!r.ok()) csv::write_row(out, {test.unit_id(r.unit), "box", r.error});
    }
    for (const auto& u : run.estimates) {
      if (!u.estimate && !u.error.empty()) {
        const bool box_failed = !run.results.empty() && [&] {
          for (const auto& r : run.results) {
            if (r.unit == u.unit) return !r.ok();
          }
          return false;
        }();
        if (!box_failed) csv::write_row(out, {test.unit_id(u.unit), "estimate", u.error});
      }
    }
  }
  if (!run.traces.empty()) {
    auto out = open_output(out_dir, "trace.csv");
    std::vector<std::string> header = {"owner_id", "step", "covariate", "direction", "variation"};
    for (const auto& c : test.columns()) {
      header.push_back(c.name + "_lower");
      header.push_back(c.name + "_upper");
    }
    csv::write_row(out, header);
    for (std::size_t idx = 0; idx < run.traces.size(); ++idx) {
      for (const auto& step : run.traces[idx]) {
        std::vector<std::string> row = {
            test.unit_id(run.results[idx].unit), std::to_string(step.step),
            test.columns()[step.axis].name, step.direction == Direction::kDown ? "down" : "up",
            csv::format_number(step.variation)};
        for (std::size_t j = 0; j < test.p(); ++j) {
          row.push_back(csv::format_number(step.box.lower[j]));
          row.push_back(csv::format_number(step.box.upper[j]));
        }
        csv::write_row(out, row);
      }
    }
  }
}

std::vector<IntervalEstimate> run_intervals(const MatchRun& run, const Dataset& test,
                                            const OutcomeModel* model,
                                            const std::vector<IntervalMethod>& methods,
                                            const std::vector<double>& levels,
                                            const ResamplingConfig& resampling,
                                            std::optional<double> true_variance,
                                            std::vector<std::string>* skipped) {
  if (!run.variant) throw ConfigError("intervals need an estimator variant");
  std::vector<IntervalEstimate> out;
  for (const auto& u : run.estimates) {
    if (!u.estimate) continue;
    const MatchedGroup* group = nullptr;
    for (const auto& r : run.results) {
      if (r.unit == u.unit && r.ok()) group = &r.solution->group;
    }
    if (!group) continue;
    IntervalInputs inputs;
    inputs.group = group;
    inputs.test = &test;
    inputs.model = model;
    inputs.variant = *run.variant;
    inputs.resampling = resampling;
    inputs.true_variance = true_variance;
    for (auto method : methods) {
      try {
        auto rows = intervals(u.unit, method, levels, inputs);
        out.insert(out.end(), rows.begin(), rows.end());
      } catch (const ValidationError& e) {
        if (skipped) skipped->push_back(test.unit_id(u.unit) + " " + to_string(method) + ": " + e.what());
      }
    }
  }
  return out;
}

void write_truth_csv(const SimTruth& truth, const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  csv::write_row(out, {"id", "g", "h", "propensity", "y0", "y1"});
  for (std::size_t i = 0; i < data.n(); ++i) {
    csv::write_row(out, {data.unit_id(i), csv::format_number(truth.g[i]),
                         csv::format_number(truth.h[i]), csv::format_number(truth.propensity[i]),
                         csv::format_number(truth.y0[i]), csv::format_number(truth.y1[i])});
  }
}

SimTruth read_truth_csv(const std::string& path, const Dataset& data) {
  const csv::Table table = csv::read_file(path);
  const auto id_col = table.column("id");
  const auto h_col = table.column("h");
  if (!id_col || !h_col) throw SchemaError("truth file '" + path + "' needs columns id and h");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SimTruth truth;
  truth.g.assign(data.n(), nan);
  truth.h.assign(data.n(), nan);
  truth.propensity.assign(data.n(), nan);
  truth.y0.assign(data.n(), nan);
  truth.y1.assign(data.n(), nan);
  std::vector<bool> seen(data.n(), false);
  const std::pair<const char*, std::vector<double>*> optional_columns[] = {
      {"g", &truth.g}, {"propensity", &truth.propensity}, {"y0", &truth.y0}, {"y1", &truth.y1}};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto i = data.find_unit(row[*id_col]);
    if (!i) continue;
    const std::string where = "truth row " + std::to_string(r + 1);
    truth.h[*i] = csv::parse_number(row[*h_col], where);
    for (const auto& [name, target] : optional_columns) {
      if (auto c = table.column(name)) (*target)[*i] = csv::parse_number(row[*c], where);
    }
    seen[*i] = true;
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!seen[i]) throw ValidationError("truth file has no row for unit '" + data.unit_id(i) + "'");
  }
  return truth;
}

}  // namespace ahb
