#include "ahb/ahb.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <string>

#include "ahb/config.hpp"
#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/estimation.hpp"
#include "ahb/pipeline.hpp"
#include "ahb/random.hpp"
#include "ahb/studies.hpp"
#include "ahb/tuning.hpp"

#ifndef AHB_VERSION_STRING
#define AHB_VERSION_STRING "0.0.0"
#endif

struct ahb_dataset {
  std::shared_ptr<const ahb::Dataset> data;
};

struct ahb_truth {
  ahb::SimTruth truth;
  bool has_functions = false;
};

struct ahb_model {
  std::shared_ptr<const ahb::OutcomeModel> model;
};

struct ahb_match {
  std::shared_ptr<const ahb::Dataset> test;
  ahb::MatchRun run;
};

namespace {

using ahb::Json;

thread_local std::string last_error;

template <class F>
ahb_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return AHB_OK;
  } catch (const ahb::ConfigError& e) {
    last_error = e.what();
    return AHB_ERR_CONFIG;
  } catch (const ahb::SchemaError& e) {
    last_error = e.what();
    return AHB_ERR_SCHEMA;
  } catch (const ahb::ParseError& e) {
    last_error = e.what();
    return AHB_ERR_PARSE;
  } catch (const ahb::ValidationError& e) {
    last_error = e.what();
    return AHB_ERR_VALIDATION;
  } catch (const ahb::InfeasibleError& e) {
    last_error = e.what();
    return AHB_ERR_INFEASIBLE;
  } catch (const ahb::FitError& e) {
    last_error = e.what();
    return AHB_ERR_FIT;
  } catch (const ahb::UnavailableError& e) {
    last_error = e.what();
    return AHB_ERR_UNAVAILABLE;
  } catch (const ahb::IoError& e) {
    last_error = e.what();
    return AHB_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
    return AHB_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return AHB_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ahb::ConfigError(std::string(what) + " must not be null");
}

Json parse_or_empty(const char* text) {
  if (!text || !*text) return Json::object();
  return ahb::parse_json(text);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_json(char** out, const Json& j) {
  if (out) *out = dup_string(j.dump(2));
}

ahb_dataset* wrap(ahb::Dataset data) {
  return new ahb_dataset{std::make_shared<const ahb::Dataset>(std::move(data))};
}

std::ofstream open_file(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ahb::IoError("cannot write '" + path + "'");
  return out;
}

void check_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw ahb::ConfigError(what + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      throw ahb::ConfigError("unknown key '" + item.key() + "' in " + what);
    }
  }
}

struct IntervalRequest {
  std::vector<ahb::IntervalMethod> methods;
  std::vector<double> levels{0.95};
  ahb::ResamplingConfig resampling;
  std::optional<double> true_variance;
};

IntervalRequest interval_request(const char* text) {
  const Json j = parse_or_empty(text);
  check_keys(j, {"methods", "levels", "resampling", "true_variance"}, "interval request");
  IntervalRequest r;
  try {
    if (j.contains("methods")) {
      for (const auto& m : j["methods"]) r.methods.push_back(ahb::parse_interval_method(m));
    }
    if (j.contains("levels")) r.levels = j["levels"].get<std::vector<double>>();
    if (j.contains("true_variance") && !j["true_variance"].is_null()) {
      r.true_variance = j["true_variance"].get<double>();
    }
  } catch (const nlohmann::json::exception&) {
    throw ahb::ConfigError("bad value in interval request");
  }
  if (j.contains("resampling")) r.resampling = ahb::resampling_from_json(j["resampling"]);
  if (r.methods.empty()) throw ahb::ConfigError("interval request lists no methods");
  if (r.levels.empty()) throw ahb::ConfigError("interval request lists no levels");
  for (double level : r.levels) {
    if (!(level > 0.0 && level < 1.0)) throw ahb::ConfigError("levels must lie in (0, 1)");
  }
  return r;
}

std::vector<ahb::MatchOptions> expand_grid(const Json& grid) {
  std::vector<ahb::MatchOptions> out;
  if (grid.is_array()) {
    for (const auto& entry : grid) out.push_back(ahb::match_options_from_json(entry));
    return out;
  }
  if (!grid.is_object()) throw ahb::ConfigError("tuning grid must be an array or an object");
  std::vector<Json> partial{Json::object()};
  for (const auto& item : grid.items()) {
    const Json values = item.value().is_array() ? item.value() : Json::array({item.value()});
    if (values.empty()) throw ahb::ConfigError("tuning grid key '" + item.key() + "' is empty");
    std::vector<Json> next;
    for (const auto& base : partial) {
      for (const auto& v : values) {
        Json e = base;
        e[item.key()] = v;
        next.push_back(std::move(e));
      }
    }
    partial = std::move(next);
  }
  for (const auto& e : partial) out.push_back(ahb::match_options_from_json(e));
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::map<std::string, std::vector<std::string>> read_groups(const std::string& dir) {
  const auto table = ahb::csv::read_file(dir + "/groups.csv");
  const auto owner = table.column("owner_id");
  const auto members = table.column("members");
  if (!owner || !members) throw ahb::SchemaError("groups.csv in '" + dir + "' lacks owner_id/members");
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& row : table.rows) {
    std::vector<std::string> ids;
    std::string cur;
    for (char ch : row[*members]) {
      if (ch == ';') {
        ids.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) ids.push_back(cur);
    std::sort(ids.begin(), ids.end());
    out[row[*owner]] = std::move(ids);
  }
  return out;
}

}  // namespace

extern "C" {

const char* ahb_version(void) { return AHB_VERSION_STRING; }

const char* ahb_status_name(ahb_status status) {
  switch (status) {
    case AHB_OK: return "ok";
    case AHB_ERR_CONFIG: return "config";
    case AHB_ERR_SCHEMA: return "schema";
    case AHB_ERR_PARSE: return "parse";
    case AHB_ERR_VALIDATION: return "validation";
    case AHB_ERR_INFEASIBLE: return "infeasible";
    case AHB_ERR_FIT: return "fit";
    case AHB_ERR_UNAVAILABLE: return "unavailable";
    case AHB_ERR_IO: return "io";
    case AHB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ahb_last_error(void) { return last_error.c_str(); }

void ahb_string_free(char* s) { std::free(s); }

uint64_t ahb_derive_seed(uint64_t seed, const char* stream) {
  return ahb::derive_seed(seed, stream ? stream : "");
}

ahb_status ahb_dataset_load(const char* csv_path, const char* schema_json, ahb_dataset** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(out, "out");
    const ahb::Schema schema = ahb::schema_from_json(parse_or_empty(schema_json));
    *out = wrap(ahb::load_dataset(csv_path, schema));
  });
}

ahb_status ahb_dataset_simulate(const char* dgp_json, ahb_dataset** data, ahb_truth** truth) {
  return guarded([&] {
    require(data, "data");
    auto sim = ahb::generate(ahb::dgp_from_json(parse_or_empty(dgp_json)));
    auto* d = wrap(std::move(sim.data));
    if (truth) *truth = new ahb_truth{std::move(sim.truth), true};
    *data = d;
  });
}

ahb_status ahb_dataset_split(const ahb_dataset* data, double train_fraction,
                             double validation_fraction, uint64_t seed, ahb_dataset** train,
                             ahb_dataset** validation, ahb_dataset** test) {
  return guarded([&] {
    require(data, "data");
    require(train, "train");
    require(test, "test");
    if (validation_fraction > 0.0) require(validation, "validation");
    ahb::SplitSpec spec;
    spec.train_fraction = train_fraction;
    spec.validation_fraction = validation_fraction;
    spec.seed = seed;
    auto parts = ahb::split(*data->data, spec);
    std::unique_ptr<ahb_dataset> tr(wrap(std::move(parts.train)));
    std::unique_ptr<ahb_dataset> te(wrap(std::move(parts.test)));
    if (validation) *validation = wrap(std::move(parts.validation));
    *train = tr.release();
    *test = te.release();
  });
}

ahb_status ahb_dataset_without_outcomes(const ahb_dataset* data, ahb_dataset** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    *out = wrap(data->data->without_outcomes());
  });
}

ahb_status ahb_dataset_write_csv(const ahb_dataset* data, const char* path) {
  return guarded([&] {
    require(data, "data");
    require(path, "path");
    ahb::write_dataset_csv(*data->data, path);
  });
}

size_t ahb_dataset_rows(const ahb_dataset* data) { return data ? data->data->n() : 0; }
size_t ahb_dataset_columns(const ahb_dataset* data) { return data ? data->data->p() : 0; }
size_t ahb_dataset_treated(const ahb_dataset* data) {
  return data ? data->data->count(ahb::Arm::kTreated) : 0;
}
int ahb_dataset_has_outcomes(const ahb_dataset* data) {
  return data && data->data->has_outcomes() ? 1 : 0;
}
void ahb_dataset_free(ahb_dataset* data) { delete data; }

ahb_status ahb_truth_subset(const ahb_truth* truth, const ahb_dataset* full,
                            const ahb_dataset* part, ahb_truth** out) {
  return guarded([&] {
    require(truth, "truth");
    require(full, "full");
    require(part, "part");
    require(out, "out");
    *out = new ahb_truth{truth->truth.for_units(*full->data, *part->data), truth->has_functions};
  });
}

ahb_status ahb_truth_write_csv(const ahb_truth* truth, const ahb_dataset* data, const char* path) {
  return guarded([&] {
    require(truth, "truth");
    require(data, "data");
    require(path, "path");
    ahb::write_truth_csv(truth->truth, *data->data, path);
  });
}

ahb_status ahb_truth_read_csv(const char* path, const ahb_dataset* data, ahb_truth** out) {
  return guarded([&] {
    require(path, "path");
    require(data, "data");
    require(out, "out");
    *out = new ahb_truth{ahb::read_truth_csv(path, *data->data), false};
  });
}

double ahb_truth_sigma(const ahb_truth* truth) { return truth ? truth->truth.sigma : 0.0; }
void ahb_truth_free(ahb_truth* truth) { delete truth; }

ahb_status ahb_model_fit_builtin(const ahb_dataset* train, const char* ensemble_json,
                                 ahb_model** out) {
  return guarded([&] {
    require(train, "train");
    require(out, "out");
    const auto config = ahb::ensemble_from_json(parse_or_empty(ensemble_json));
    std::shared_ptr<const ahb::OutcomeModel> model = ahb::fit_builtin(*train->data, config);
    *out = new ahb_model{std::move(model)};
  });
}

ahb_status ahb_model_load_external(const char* predictions_csv, ahb_model** out) {
  return guarded([&] {
    require(predictions_csv, "predictions_csv");
    require(out, "out");
    std::shared_ptr<const ahb::OutcomeModel> model = ahb::external_model(predictions_csv);
    *out = new ahb_model{std::move(model)};
  });
}

ahb_status ahb_model_oracle(const ahb_truth* truth, ahb_model** out) {
  return guarded([&] {
    require(truth, "truth");
    require(out, "out");
    if (!truth->has_functions) {
      throw ahb::ConfigError("the oracle predictor needs simulated data; a truth file is not enough");
    }
    std::shared_ptr<const ahb::OutcomeModel> model = ahb::oracle_model(truth->truth.functions);
    *out = new ahb_model{std::move(model)};
  });
}

const char* ahb_model_name(const ahb_model* model) {
  static const std::string names[] = {"builtin", "oracle", "external"};
  if (!model) return "";
  for (const auto& n : names) {
    if (model->model->name() == n) return n.c_str();
  }
  return "custom";
}

void ahb_model_free(ahb_model* model) { delete model; }

ahb_status ahb_match_run(const ahb_dataset* test, const ahb_model* model,
                         const char* request_json, ahb_match** out) {
  return guarded([&] {
    require(test, "test");
    require(model, "model");
    require(out, "out");
    const Json j = parse_or_empty(request_json);
    check_keys(j, {"options", "variant", "workers", "verify_oracle", "trace"}, "match request");
    ahb::MatchRequest request;
    if (j.contains("options")) request.options = ahb::match_options_from_json(j["options"]);
    try {
      if (j.contains("variant") && !j["variant"].is_null()) {
        const std::string v = j["variant"].get<std::string>();
        if (v != "none") request.variant = ahb::parse_variant(v);
      }
      request.workers = j.value("workers", 1);
      request.verify_oracle = j.value("verify_oracle", false);
      request.trace = j.value("trace", false);
    } catch (const nlohmann::json::exception&) {
      throw ahb::ConfigError("bad value in match request");
    }
    if (request.workers < 1) throw ahb::ConfigError("workers must be positive");
    auto run = ahb::run_match(*test->data, *model->model, request);
    *out = new ahb_match{test->data, std::move(run)};
  });
}

size_t ahb_match_units(const ahb_match* run) { return run ? run->run.results.size() : 0; }
size_t ahb_match_solved(const ahb_match* run) { return run ? run->run.n_solved() : 0; }
int ahb_match_oracle_agreement(const ahb_match* run) {
  if (!run || !run->run.oracle_agreement) return -1;
  return *run->run.oracle_agreement ? 1 : 0;
}

ahb_status ahb_match_summary(const ahb_match* run, char** out_json) {
  return guarded([&] {
    require(run, "run");
    require(out_json, "out_json");
    const auto& r = run->run;
    const auto& test = *run->test;
    Json j;
    j["n_units"] = r.results.size();
    j["n_solved"] = r.n_solved();
    j["n_failed"] = r.results.size() - r.n_solved();
    Json errors = Json::array();
    for (const auto& u : r.results) {
      if (!u.ok()) {
        errors.push_back({{"unit_id", test.unit_id(u.unit)}, {"stage", "match"}, {"message", u.error}});
      }
    }
    for (const auto& e : r.estimates) {
      if (!e.estimate && !e.error.empty()) {
        const bool solved = std::any_of(r.results.begin(), r.results.end(),
                                        [&](const ahb::UnitResult& u) { return u.unit == e.unit && u.ok(); });
        if (solved) {
          errors.push_back({{"unit_id", test.unit_id(e.unit)}, {"stage", "estimate"}, {"message", e.error}});
        }
      }
    }
    j["errors"] = errors;
    j["oracle_agreement"] = r.oracle_agreement ? Json(*r.oracle_agreement) : Json(nullptr);
    j["oracle_mismatches"] = r.oracle_mismatches;
    if (r.variant) {
      j["variant"] = ahb::to_string(*r.variant);
      try {
        const auto a = ahb::att(r.estimates, test);
        j["att"] = a.att;
        j["att_n_used"] = a.n_used;
        j["att_n_excluded"] = a.n_excluded;
      } catch (const ahb::ValidationError&) {
        j["att"] = nullptr;
      }
    }
    set_json(out_json, j);
  });
}

ahb_status ahb_match_write(const ahb_match* run, const char* out_dir) {
  return guarded([&] {
    require(run, "run");
    require(out_dir, "out_dir");
    ahb::write_match_artifacts(run->run, *run->test, out_dir);
  });
}

ahb_status ahb_match_intervals(const ahb_match* run, const ahb_model* model,
                               const char* request_json, const char* path, char** summary_json) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    const IntervalRequest req = interval_request(request_json);
    std::vector<std::string> skipped;
    const auto rows = ahb::run_intervals(run->run, *run->test, model ? model->model.get() : nullptr,
                                         req.methods, req.levels, req.resampling, req.true_variance,
                                         &skipped);
    auto out = open_file(path);
    ahb::write_intervals_header(out);
    for (const auto& e : rows) ahb::write_interval_row(out, e);
    if (!out) throw ahb::IoError("failed writing '" + std::string(path) + "'");
    set_json(summary_json, Json{{"n_intervals", rows.size()}, {"skipped", skipped}});
  });
}

ahb_status ahb_match_coverage(const ahb_match* run, const ahb_model* model, const ahb_truth* truth,
                              const char* request_json, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(truth, "truth");
    require(path, "path");
    IntervalRequest req = interval_request(request_json);
    if (!req.true_variance && truth->has_functions) {
      req.true_variance = truth->truth.sigma * truth->truth.sigma;
    }
    const auto& test = *run->test;
    if (truth->truth.h.size() != test.n()) {
      throw ahb::ValidationError("truth does not cover the matched units");
    }
    ahb::CoverageTally tally(req.methods);
    const double level = req.levels.front();
    for (auto method : req.methods) {
      std::vector<std::string> skipped;
      const auto rows = ahb::run_intervals(run->run, test, model ? model->model.get() : nullptr,
                                           {method}, {level}, req.resampling, req.true_variance,
                                           &skipped);
      for (const auto& e : rows) {
        const auto i = test.find_unit(e.unit_id);
        tally.add(method, e.lower, e.upper, truth->truth.h[*i]);
      }
      for (std::size_t s = 0; s < skipped.size(); ++s) tally.skip(method);
    }
    auto out = open_file(path);
    ahb::write_coverage_report(out, tally.rows("data"));
    if (!out) throw ahb::IoError("failed writing '" + std::string(path) + "'");
  });
}

void ahb_match_free(ahb_match* run) { delete run; }

ahb_status ahb_tune(const ahb_dataset* validation, const ahb_model* model, const char* grid_json,
                    int workers, const char* report_path, char** best_json) {
  return guarded([&] {
    require(validation, "validation");
    require(model, "model");
    require(grid_json, "grid_json");
    const auto grid = expand_grid(ahb::parse_json(grid_json));
    const auto result = ahb::tune(grid, *validation->data, *model->model, workers);
    if (report_path) {
      auto out = open_file(report_path);
      ahb::write_tuning_report(out, result);
      if (!out) throw ahb::IoError("failed writing '" + std::string(report_path) + "'");
    }
    set_json(best_json, Json{{"options", ahb::match_options_to_json(result.table[result.best].options)},
                             {"loss", number_or_null(result.table[result.best].loss)},
                             {"n_infeasible", result.table[result.best].n_infeasible}});
  });
}

ahb_status ahb_simulation_study(const char* config_json, const char* rows_path,
                                const char* summary_path) {
  return guarded([&] {
    require(config_json, "config_json");
    const auto config = ahb::study_config_from_json(ahb::parse_json(config_json));
    const auto result = ahb::run_simulation_study(config);
    if (rows_path) {
      auto out = open_file(rows_path);
      ahb::write_study_rows(out, result);
      if (!out) throw ahb::IoError("failed writing '" + std::string(rows_path) + "'");
    }
    if (summary_path) {
      auto out = open_file(summary_path);
      ahb::write_study_summary(out, result);
      if (!out) throw ahb::IoError("failed writing '" + std::string(summary_path) + "'");
    }
  });
}

ahb_status ahb_coverage_study(const char* config_json, const char* report_path) {
  return guarded([&] {
    require(config_json, "config_json");
    require(report_path, "report_path");
    const auto config = ahb::coverage_config_from_json(ahb::parse_json(config_json));
    const auto rows = ahb::run_coverage_study(config);
    auto out = open_file(report_path);
    ahb::write_coverage_report(out, rows);
    if (!out) throw ahb::IoError("failed writing '" + std::string(report_path) + "'");
  });
}

ahb_status ahb_resolve_config(const char* kind, const char* json, char** out_json) {
  return guarded([&] {
    require(kind, "kind");
    require(out_json, "out_json");
    const Json in = parse_or_empty(json);
    const std::string k = kind;
    Json out;
    if (k == "match") {
      out = ahb::match_options_to_json(ahb::match_options_from_json(in));
    } else if (k == "ensemble") {
      out = ahb::ensemble_to_json(ahb::ensemble_from_json(in));
    } else if (k == "resampling") {
      out = ahb::resampling_to_json(ahb::resampling_from_json(in));
    } else if (k == "dgp") {
      out = ahb::dgp_to_json(ahb::dgp_from_json(in));
    } else if (k == "schema") {
      out = ahb::schema_to_json(ahb::schema_from_json(in));
    } else if (k == "study") {
      out = ahb::study_config_to_json(ahb::study_config_from_json(in));
    } else if (k == "coverage") {
      out = ahb::coverage_config_to_json(ahb::coverage_config_from_json(in));
    } else {
      throw ahb::ConfigError("unknown config kind '" + k + "'");
    }
    set_json(out_json, out);
  });
}

ahb_status ahb_report(const char* run_dir, const ahb_dataset* data, const char* compare_dir,
                      const char* request_json, char** out_json) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(data, "data");
    require(out_json, "out_json");
    const ahb::Dataset& d = *data->data;
    const std::string dir = run_dir;
    const Json req = parse_or_empty(request_json);
    check_keys(req, {"cate_column", "bins"}, "report request");

    const auto table = ahb::csv::read_file(dir + "/estimates.csv");
    const auto id_col = table.column("unit_id");
    const auto ite_col = table.column("ite");
    if (!id_col || !ite_col) throw ahb::SchemaError("estimates.csv lacks unit_id/ite");
    struct Row {
      std::size_t unit;
      double ite;
    };
    std::vector<Row> treated;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const auto i = d.find_unit(row[*id_col]);
      if (!i) throw ahb::ValidationError("unit '" + row[*id_col] + "' is not in the data");
      if (!d.treated(*i)) continue;
      treated.push_back({*i, ahb::csv::parse_number(row[*ite_col], "estimates row " + std::to_string(r + 1))});
    }

    const auto groups = read_groups(dir);
    std::vector<double> sizes;
    for (const auto& entry : groups) sizes.push_back(static_cast<double>(entry.second.size()));

    Json j;
    j["run_dir"] = dir;
    j["n_groups"] = groups.size();
    j["median_group_size"] = number_or_null(median(sizes));
    j["n_estimates"] = table.rows.size();
    double sum = 0.0;
    for (const auto& t : treated) sum += t.ite;
    j["att"] = treated.empty() ? Json(nullptr) : Json(sum / static_cast<double>(treated.size()));
    j["att_n_used"] = treated.size();

    if (req.contains("cate_column")) {
      const std::string name = req["cate_column"].get<std::string>();
      const auto col = d.find_column(name);
      if (!col) throw ahb::ConfigError("no covariate named '" + name + "'");
      const int bins = req.value("bins", 4);
      if (bins < 1) throw ahb::ConfigError("bins must be positive");
      Json cate = Json::array();
      if (!treated.empty()) {
        double lo = d.at(treated.front().unit, *col), hi = lo;
        for (const auto& t : treated) {
          lo = std::min(lo, d.at(t.unit, *col));
          hi = std::max(hi, d.at(t.unit, *col));
        }
        const double width = (hi - lo) / bins;
        for (int b = 0; b < bins; ++b) {
          const double a = lo + width * b;
          const double z = b + 1 == bins ? hi : lo + width * (b + 1);
          double s = 0.0;
          std::size_t count = 0;
          for (const auto& t : treated) {
            const double v = d.at(t.unit, *col);
            if (v >= a && (v < z || (b + 1 == bins && v <= z))) {
              s += t.ite;
              ++count;
            }
          }
          cate.push_back({{"lower", a}, {"upper", z}, {"count", count},
                          {"cate", count ? Json(s / static_cast<double>(count)) : Json(nullptr)}});
        }
      }
      j["cate_column"] = name;
      j["cate"] = cate;
    }

    if (compare_dir) {
      const auto other = read_groups(compare_dir);
      std::vector<double> rates;
      for (const auto& [owner, a] : groups) {
        const auto it = other.find(owner);
        if (it == other.end()) continue;
        const auto& b = it->second;
        std::vector<std::string> both;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
        const double inter = static_cast<double>(both.size());
        rates.push_back(std::max(inter / static_cast<double>(a.size()), inter / static_cast<double>(b.size())));
      }
      j["compare_dir"] = compare_dir;
      j["n_compared"] = rates.size();
      j["median_mutual_membership"] = number_or_null(median(rates));
    }
    set_json(out_json, j);
  });
}

}  // extern "C"
