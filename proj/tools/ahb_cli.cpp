#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ahb/ahb.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

struct Failure {
  ahb_status status;
  std::string message;
};

int exit_code(ahb_status status) {
  switch (status) {
    case AHB_OK: return kExitOk;
    case AHB_ERR_CONFIG:
    case AHB_ERR_SCHEMA:
    case AHB_ERR_PARSE:
    case AHB_ERR_VALIDATION:
    case AHB_ERR_UNAVAILABLE: return kExitConfig;
    case AHB_ERR_INFEASIBLE: return kExitInfeasible;
    case AHB_ERR_IO: return kExitIo;
    default: return kExitOther;
  }
}

[[noreturn]] void fail(ahb_status status, const std::string& message) { throw Failure{status, message}; }

void check(ahb_status status, const std::string& context) {
  if (status != AHB_OK) fail(status, context + ": " + ahb_last_error());
}

struct DatasetFree {
  void operator()(ahb_dataset* p) const { ahb_dataset_free(p); }
};
struct TruthFree {
  void operator()(ahb_truth* p) const { ahb_truth_free(p); }
};
struct ModelFree {
  void operator()(ahb_model* p) const { ahb_model_free(p); }
};
struct MatchFree {
  void operator()(ahb_match* p) const { ahb_match_free(p); }
};
using DatasetPtr = std::unique_ptr<ahb_dataset, DatasetFree>;
using TruthPtr = std::unique_ptr<ahb_truth, TruthFree>;
using ModelPtr = std::unique_ptr<ahb_model, ModelFree>;
using MatchPtr = std::unique_ptr<ahb_match, MatchFree>;

std::string take(char* s) {
  std::string out = s ? s : "";
  ahb_string_free(s);
  return out;
}

Json parse(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(AHB_ERR_PARSE, what + ": " + e.what());
  }
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(AHB_ERR_IO, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(AHB_ERR_IO, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) fail(AHB_ERR_IO, "failed writing '" + path + "'");
}

Json resolve(const char* kind, const Json& j) {
  char* out = nullptr;
  check(ahb_resolve_config(kind, j.dump().c_str(), &out), std::string("invalid ") + kind + " config");
  return parse(take(out), kind);
}

std::string absolute(const std::string& path) {
  if (path.empty()) return path;
  return fs::weakly_canonical(fs::absolute(path)).string();
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(AHB_ERR_IO, "cannot create '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

// Flags that describe the run, as opposed to --workers/--out-dir. They may
// not be combined with --manifest.
struct Tracked {
  std::vector<CLI::Option*> options;

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    auto* o = app->add_option(name, target, help);
    options.push_back(o);
    return o;
  }
  CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
    auto* o = app->add_flag(name, target, help);
    options.push_back(o);
    return o;
  }
  std::optional<std::string> first_given() const {
    for (auto* o : options) {
      if (o->count() > 0) return o->get_name();
    }
    return std::nullopt;
  }
};

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = ".";
  std::string manifest;
};

void add_common(CLI::App* app, Common& c, Tracked& tracked) {
  tracked.add(app, "--seed", c.seed, "Root seed for every random stream");
  app->add_option("--workers", c.workers, "Worker threads for per-unit work")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "Output directory");
  app->add_option("--manifest", c.manifest, "Re-run the configuration recorded in a run-manifest.json");
}

struct InputFlags {
  std::string data;
  std::string schema;
  std::string simulate;
  std::string train;
  double train_fraction = 2.0 / 3.0;
  double validation_fraction = 0.0;
  std::string predictor = "builtin";
  std::string ensemble;
  std::optional<int> trees, max_depth, min_leaf;
};

void add_inputs(CLI::App* app, InputFlags& f, Tracked& t, bool with_validation) {
  t.add(app, "--data", f.data, "Input CSV");
  t.add(app, "--schema", f.schema, "Schema JSON file");
  t.add(app, "--simulate", f.simulate, "Simulation config JSON file (instead of --data)");
  t.add(app, "--train", f.train, "Separate training CSV for the built-in predictor");
  t.add(app, "--train-fraction", f.train_fraction, "Training share when splitting --data");
  if (with_validation) {
    t.add(app, "--validation-fraction", f.validation_fraction, "Validation share when splitting --data");
  }
  t.add(app, "--predictor", f.predictor, "builtin | external:<file> | oracle");
  t.add(app, "--predictor-options", f.ensemble, "Ensemble options JSON file");
  t.add(app, "--trees", f.trees, "Trees per ensemble");
  t.add(app, "--max-depth", f.max_depth, "Maximum tree depth");
  t.add(app, "--min-leaf", f.min_leaf, "Minimum units per leaf");
}

Json inputs_json(const InputFlags& f, std::uint64_t seed) {
  if (f.data.empty() == f.simulate.empty()) {
    fail(AHB_ERR_CONFIG, "give exactly one of --data and --simulate");
  }
  Json j;
  j["data"] = f.data.empty() ? Json(nullptr) : Json(absolute(f.data));
  if (!f.data.empty()) {
    j["schema"] = resolve("schema", f.schema.empty() ? Json::object() : read_json(f.schema));
    j["simulate"] = nullptr;
  } else {
    if (!f.schema.empty()) fail(AHB_ERR_CONFIG, "--schema only applies to --data");
    Json dgp = read_json(f.simulate);
    if (dgp.is_object()) dgp["seed"] = ahb_derive_seed(seed, "simulation");
    j["schema"] = nullptr;
    j["simulate"] = resolve("dgp", dgp);
  }
  j["train"] = f.train.empty() ? Json(nullptr) : Json(absolute(f.train));
  j["train_fraction"] = f.train_fraction;
  j["validation_fraction"] = f.validation_fraction;
  const std::string& p = f.predictor;
  if (p.rfind("external:", 0) == 0) {
    const std::string file = p.substr(9);
    if (file.empty()) fail(AHB_ERR_CONFIG, "--predictor external:<file> needs a file");
    j["predictor"] = "external:" + absolute(file);
  } else if (p == "builtin" || p == "oracle") {
    j["predictor"] = p;
  } else {
    fail(AHB_ERR_CONFIG, "unknown predictor '" + p + "' (builtin, external:<file>, oracle)");
  }
  Json ens = f.ensemble.empty() ? Json::object() : read_json(f.ensemble);
  if (!ens.is_object()) fail(AHB_ERR_CONFIG, "predictor options must be a JSON object");
  if (f.trees) ens["trees"] = *f.trees;
  if (f.max_depth) ens["max_depth"] = *f.max_depth;
  if (f.min_leaf) ens["min_leaf"] = *f.min_leaf;
  ens["seed"] = ahb_derive_seed(seed, "predictor");
  j["ensemble"] = resolve("ensemble", ens);
  return j;
}

struct Prepared {
  DatasetPtr full;
  TruthPtr truth;  // simulation only
  DatasetPtr train;
  DatasetPtr validation;
  DatasetPtr test;
  TruthPtr test_truth;
  ModelPtr model;
};

DatasetPtr load(const std::string& path, const Json& schema) {
  ahb_dataset* d = nullptr;
  check(ahb_dataset_load(path.c_str(), schema.dump().c_str(), &d), "loading '" + path + "'");
  return DatasetPtr(d);
}

DatasetPtr load_full(const Json& inputs, TruthPtr* truth) {
  if (!inputs["simulate"].is_null()) {
    ahb_dataset* d = nullptr;
    ahb_truth* t = nullptr;
    check(ahb_dataset_simulate(inputs["simulate"].dump().c_str(), &d, &t), "simulation");
    if (truth) truth->reset(t);
    else ahb_truth_free(t);
    return DatasetPtr(d);
  }
  return load(inputs["data"].get<std::string>(), inputs["schema"]);
}

// Builds the model and the unit sets. `need_validation` selects the
// validation split (tuning) instead of the test split as the matched set.
Prepared prepare(const Json& inputs, std::uint64_t seed, bool need_validation) {
  Prepared p;
  p.full = load_full(inputs, &p.truth);
  const std::string predictor = inputs["predictor"].get<std::string>();
  const bool builtin = predictor == "builtin";
  const double train_fraction = inputs["train_fraction"].get<double>();
  const double validation_fraction = inputs["validation_fraction"].get<double>();

  if (builtin && inputs["train"].is_null()) {
    ahb_dataset *tr = nullptr, *va = nullptr, *te = nullptr;
    check(ahb_dataset_split(p.full.get(), train_fraction, validation_fraction,
                            ahb_derive_seed(seed, "split"), &tr, &va, &te),
          "splitting the data");
    p.train.reset(tr);
    p.validation.reset(va);
    p.test.reset(te);
    if (need_validation && ahb_dataset_rows(p.validation.get()) == 0) {
      fail(AHB_ERR_CONFIG, "tuning needs --validation-fraction > 0");
    }
  } else {
    if (builtin) {
      const Json schema = inputs["schema"].is_null() ? Json::object() : inputs["schema"];
      p.train = load(inputs["train"].get<std::string>(), schema);
    }
    // Without a split every input unit is matched.
  }

  ahb_model* m = nullptr;
  if (builtin) {
    check(ahb_model_fit_builtin(p.train.get(), inputs["ensemble"].dump().c_str(), &m),
          "fitting the built-in predictor");
  } else if (predictor == "oracle") {
    if (!p.truth) fail(AHB_ERR_CONFIG, "the oracle predictor is only available with --simulate");
    check(ahb_model_oracle(p.truth.get(), &m), "oracle predictor");
  } else {
    check(ahb_model_load_external(predictor.substr(9).c_str(), &m), "external predictions");
  }
  p.model.reset(m);
  return p;
}

const ahb_dataset* matched_set(const Prepared& p, bool validation) {
  if (validation && p.validation && ahb_dataset_rows(p.validation.get()) > 0) return p.validation.get();
  if (p.test) return p.test.get();
  return p.full.get();
}

struct MatchFlags {
  std::string options_file;
  std::string solver;
  std::optional<int> m;
  std::optional<double> gamma0, gamma1, beta, c, eps_abs;
  std::optional<int> grid;
  std::string preprocess;
  bool normalize = false;
  bool no_normalize = false;
  bool exclude_same_arm = false;
  std::string variant = "tau_a";
  bool verify_oracle = false;
  bool trace = false;
};

void add_match_flags(CLI::App* app, MatchFlags& f, Tracked& t) {
  t.add(app, "--options", f.options_file, "Match options JSON file (flags override it)");
  t.add(app, "--solver", f.solver, "mip | fast");
  t.add(app, "--m", f.m, "Minimum control units per box");
  t.add(app, "--gamma0", f.gamma0, "Weight on control-surface distances");
  t.add(app, "--gamma1", f.gamma1, "Weight on treated-surface distances");
  t.add(app, "--beta", f.beta, "Reward per matched unit");
  t.flag(app, "--normalize", f.normalize, "Scale gamma0 and gamma1 by the outcome variance");
  t.flag(app, "--no-normalize", f.no_normalize, "Use gamma0 and gamma1 as given");
  t.add(app, "--preprocess", f.preprocess,
        "none | threshold_l:<v> | threshold_coord:<v> | sort:<d> (exact solver)");
  t.flag(app, "--exclude-same-arm", f.exclude_same_arm, "Keep other units of the owner's arm out of boxes");
  t.add(app, "--c", f.c, "Fast solver stopping multiplier");
  t.add(app, "--grid", f.grid, "Fast solver grid points per axis");
  t.add(app, "--eps-abs", f.eps_abs, "Fast solver stopping slack");
  t.add(app, "--variant", f.variant, "tau_a | tau_b | none");
  t.flag(app, "--verify-oracle", f.verify_oracle, "Check every exact solution by enumeration");
  t.flag(app, "--trace", f.trace, "Write the fast solver's step log to trace.csv");
}

Json match_json(const MatchFlags& f) {
  Json o = f.options_file.empty() ? Json::object() : read_json(f.options_file);
  if (!o.is_object()) fail(AHB_ERR_CONFIG, "match options must be a JSON object");
  if (!f.solver.empty()) o["solver"] = f.solver;
  if (f.m) o["m"] = *f.m;
  if (f.gamma0) o["gamma0"] = *f.gamma0;
  if (f.gamma1) o["gamma1"] = *f.gamma1;
  if (f.beta) o["beta"] = *f.beta;
  if (f.normalize && f.no_normalize) fail(AHB_ERR_CONFIG, "--normalize and --no-normalize conflict");
  if (f.normalize) o["normalize"] = true;
  if (f.no_normalize) o["normalize"] = false;
  if (!f.preprocess.empty()) o["preprocess"] = f.preprocess;
  if (f.exclude_same_arm) o["exclude_same_arm"] = true;
  if (f.c) o["c"] = *f.c;
  if (f.grid) o["grid"] = *f.grid;
  if (f.eps_abs) o["eps_abs"] = *f.eps_abs;
  if (f.variant != "tau_a" && f.variant != "tau_b" && f.variant != "none") {
    fail(AHB_ERR_CONFIG, "unknown variant '" + f.variant + "' (tau_a, tau_b, none)");
  }
  return Json{{"options", resolve("match", o)},
              {"variant", f.variant},
              {"verify_oracle", f.verify_oracle},
              {"trace", f.trace}};
}

Json base_manifest(const std::string& command, std::uint64_t seed, int workers) {
  Json j;
  j["tool"] = "ahb";
  j["version"] = ahb_version();
  j["command"] = command;
  j["seed"] = seed;
  j["workers"] = workers;
  return j;
}

Json load_manifest(const std::string& path, const std::string& command, const Tracked& tracked) {
  if (auto given = tracked.first_given()) {
    fail(AHB_ERR_CONFIG, "--manifest cannot be combined with " + *given);
  }
  Json j = read_json(path);
  if (!j.is_object() || j.value("command", "") != command) {
    fail(AHB_ERR_CONFIG, "'" + path + "' is not a manifest of the " + command + " command");
  }
  return j;
}

MatchPtr run_match(const ahb_dataset* units, const ahb_model* model, const Json& match, int workers) {
  Json request = match;
  request["workers"] = workers;
  ahb_match* run = nullptr;
  check(ahb_match_run(units, model, request.dump().c_str(), &run), "matching");
  return MatchPtr(run);
}

// Writes the artifacts, reports failures on stderr and returns the summary.
Json finish_match(const ahb_match* run, const std::string& out_dir) {
  check(ahb_match_write(run, out_dir.c_str()), "writing artifacts");
  char* s = nullptr;
  check(ahb_match_summary(run, &s), "summarizing");
  Json summary = parse(take(s), "summary");
  const auto& errors = summary["errors"];
  std::cerr << "matched " << summary["n_solved"].get<std::size_t>() << " of "
            << summary["n_units"].get<std::size_t>() << " units\n";
  std::size_t shown = 0;
  for (const auto& e : errors) {
    if (shown++ == 10) {
      std::cerr << "  ... " << errors.size() - 10 << " more in errors.csv\n";
      break;
    }
    std::cerr << "  " << e["unit_id"].get<std::string>() << " (" << e["stage"].get<std::string>()
              << "): " << e["message"].get<std::string>() << "\n";
  }
  if (!summary["oracle_agreement"].is_null()) {
    std::cerr << "oracle agreement: " << (summary["oracle_agreement"].get<bool>() ? "yes" : "NO") << "\n";
  }
  Json results;
  for (const char* k : {"n_units", "n_solved", "n_failed", "oracle_agreement", "oracle_mismatches", "att"}) {
    if (summary.contains(k)) results[k] = summary[k];
  }
  return results;
}

int all_failed_status(const Json& results) {
  return results["n_units"].get<std::size_t>() > 0 && results["n_solved"].get<std::size_t>() == 0
             ? kExitInfeasible
             : kExitOk;
}

// ---- match ----

struct MatchCommand {
  Common common;
  InputFlags inputs;
  MatchFlags match;
  Tracked tracked;
};

int cmd_match(MatchCommand& c) {
  Json manifest;
  if (!c.common.manifest.empty()) {
    manifest = load_manifest(c.common.manifest, "match", c.tracked);
    c.common.seed = manifest["seed"].get<std::uint64_t>();
  } else {
    manifest = Json::object();
    manifest["inputs"] = inputs_json(c.inputs, c.common.seed);
    manifest["match"] = match_json(c.match);
  }
  Json out = base_manifest("match", c.common.seed, c.common.workers);
  out["inputs"] = manifest["inputs"];
  out["match"] = manifest["match"];

  const Prepared p = prepare(out["inputs"], c.common.seed, false);
  const auto run = run_match(matched_set(p, false), p.model.get(), out["match"], c.common.workers);
  make_dir(c.common.out_dir);
  out["results"] = finish_match(run.get(), c.common.out_dir);
  write_json(join(c.common.out_dir, "run-manifest.json"), out);
  return all_failed_status(out["results"]);
}

// ---- intervals ----

struct IntervalCommand {
  Common common;
  InputFlags inputs;
  MatchFlags match;
  Tracked tracked;
  std::vector<std::string> methods;
  std::vector<double> levels;
  std::optional<int> resamples;
  std::optional<double> subsample_fraction;
  bool no_rescale = false;
  std::optional<double> true_variance;
  bool coverage = false;
  std::string truth;
};

Json interval_json(const IntervalCommand& c, std::uint64_t seed) {
  std::vector<std::string> methods;
  for (const auto& m : c.methods) {
    std::stringstream ss(m);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) methods.push_back(part);
    }
  }
  if (methods.empty()) fail(AHB_ERR_CONFIG, "give at least one --method");
  Json resampling = Json::object();
  if (c.resamples) resampling["resamples"] = *c.resamples;
  if (c.subsample_fraction) resampling["subsample_fraction"] = *c.subsample_fraction;
  if (c.no_rescale) resampling["rescale_subsample"] = false;
  resampling["seed"] = ahb_derive_seed(seed, "resampling");
  Json j;
  j["methods"] = methods;
  j["levels"] = c.levels.empty() ? std::vector<double>{0.95} : c.levels;
  j["resampling"] = resolve("resampling", resampling);
  j["true_variance"] = c.true_variance ? Json(*c.true_variance) : Json(nullptr);
  j["coverage"] = c.coverage;
  j["truth"] = c.truth.empty() ? Json(nullptr) : Json(absolute(c.truth));
  return j;
}

int cmd_intervals(IntervalCommand& c) {
  Json manifest;
  if (!c.common.manifest.empty()) {
    manifest = load_manifest(c.common.manifest, "intervals", c.tracked);
    c.common.seed = manifest["seed"].get<std::uint64_t>();
  } else {
    manifest = Json::object();
    manifest["inputs"] = inputs_json(c.inputs, c.common.seed);
    manifest["match"] = match_json(c.match);
    manifest["intervals"] = interval_json(c, c.common.seed);
  }
  Json out = base_manifest("intervals", c.common.seed, c.common.workers);
  out["inputs"] = manifest["inputs"];
  out["match"] = manifest["match"];
  out["intervals"] = manifest["intervals"];
  const Json iv = out["intervals"];
  if (out["match"]["variant"] == "none") fail(AHB_ERR_CONFIG, "intervals need --variant tau_a or tau_b");

  const Prepared p = prepare(out["inputs"], c.common.seed, false);
  const ahb_dataset* units = matched_set(p, false);
  const auto run = run_match(units, p.model.get(), out["match"], c.common.workers);
  make_dir(c.common.out_dir);
  out["results"] = finish_match(run.get(), c.common.out_dir);

  Json request{{"methods", iv["methods"]},
               {"levels", iv["levels"]},
               {"resampling", iv["resampling"]},
               {"true_variance", iv["true_variance"]}};
  TruthPtr truth;
  if (p.truth) {
    ahb_truth* t = nullptr;
    check(ahb_truth_subset(p.truth.get(), p.full.get(), units, &t), "simulation truth");
    truth.reset(t);
    if (request["true_variance"].is_null()) {
      const double s = ahb_truth_sigma(truth.get());
      request["true_variance"] = s * s;
    }
  }
  if (iv["coverage"].get<bool>()) {
    if (!iv["truth"].is_null()) {
      ahb_truth* t = nullptr;
      check(ahb_truth_read_csv(iv["truth"].get<std::string>().c_str(), units, &t), "truth file");
      truth.reset(t);
    }
    if (!truth) fail(AHB_ERR_CONFIG, "--coverage needs --truth <file> or --simulate");
    check(ahb_match_coverage(run.get(), p.model.get(), truth.get(), request.dump().c_str(),
                             join(c.common.out_dir, "coverage.csv").c_str()),
          "coverage");
  } else {
    char* s = nullptr;
    check(ahb_match_intervals(run.get(), p.model.get(), request.dump().c_str(),
                              join(c.common.out_dir, "intervals.csv").c_str(), &s),
          "intervals");
    const Json summary = parse(take(s), "interval summary");
    out["results"]["n_intervals"] = summary["n_intervals"];
    out["results"]["n_skipped"] = summary["skipped"].size();
    if (!summary["skipped"].empty()) {
      std::cerr << summary["skipped"].size() << " unit/method pairs skipped, e.g. "
                << summary["skipped"][0].get<std::string>() << "\n";
    }
  }
  write_json(join(c.common.out_dir, "run-manifest.json"), out);
  return all_failed_status(out["results"]);
}

// ---- tune ----

struct TuneCommand {
  Common common;
  InputFlags inputs;
  Tracked tracked;
  std::string grid;
};

int cmd_tune(TuneCommand& c) {
  Json manifest;
  if (!c.common.manifest.empty()) {
    manifest = load_manifest(c.common.manifest, "tune", c.tracked);
    c.common.seed = manifest["seed"].get<std::uint64_t>();
  } else {
    if (c.grid.empty()) fail(AHB_ERR_CONFIG, "tune needs --grid <file>");
    manifest = Json::object();
    manifest["inputs"] = inputs_json(c.inputs, c.common.seed);
    manifest["grid"] = read_json(c.grid);
  }
  Json out = base_manifest("tune", c.common.seed, c.common.workers);
  out["inputs"] = manifest["inputs"];
  out["grid"] = manifest["grid"];

  const Prepared p = prepare(out["inputs"], c.common.seed, true);
  make_dir(c.common.out_dir);
  char* best = nullptr;
  check(ahb_tune(matched_set(p, true), p.model.get(), out["grid"].dump().c_str(), c.common.workers,
                 join(c.common.out_dir, "tuning.csv").c_str(), &best),
        "tuning");
  const Json b = parse(take(best), "tuning result");
  write_json(join(c.common.out_dir, "best-options.json"), b["options"]);
  out["results"] = b;
  write_json(join(c.common.out_dir, "run-manifest.json"), out);
  std::cerr << "best loss " << b["loss"].dump() << "\n";
  return kExitOk;
}

// ---- simulate ----

struct SimulateCommand {
  Common common;
  Tracked tracked;
  std::string study;
  std::string coverage;
  std::string dgp;
};

int cmd_simulate(SimulateCommand& c, const CLI::App& app) {
  Json manifest;
  if (!c.common.manifest.empty()) {
    manifest = load_manifest(c.common.manifest, "simulate", c.tracked);
    c.common.seed = manifest["seed"].get<std::uint64_t>();
  } else {
    const int given = !c.study.empty() + !c.coverage.empty() + !c.dgp.empty();
    if (given != 1) fail(AHB_ERR_CONFIG, "give exactly one of --config, --coverage-config and --dgp");
    const bool seed_given = app.get_option("--seed")->count() > 0;
    manifest = Json::object();
    if (!c.dgp.empty()) {
      Json dgp = read_json(c.dgp);
      if (dgp.is_object()) dgp["seed"] = ahb_derive_seed(c.common.seed, "simulation");
      manifest["dgp"] = resolve("dgp", dgp);
    } else {
      const bool is_study = !c.study.empty();
      Json cfg = read_json(is_study ? c.study : c.coverage);
      if (!cfg.is_object()) fail(AHB_ERR_CONFIG, "study config must be a JSON object");
      if (seed_given) cfg["seed"] = c.common.seed;
      else if (cfg.contains("seed")) c.common.seed = cfg["seed"].get<std::uint64_t>();
      cfg.erase("workers");
      manifest[is_study ? "study" : "coverage"] = resolve(is_study ? "study" : "coverage", cfg);
      manifest[is_study ? "study" : "coverage"].erase("workers");
    }
  }
  Json out = base_manifest("simulate", c.common.seed, c.common.workers);
  make_dir(c.common.out_dir);
  if (manifest.contains("dgp")) {
    out["dgp"] = manifest["dgp"];
    ahb_dataset* d = nullptr;
    ahb_truth* t = nullptr;
    check(ahb_dataset_simulate(out["dgp"].dump().c_str(), &d, &t), "simulation");
    DatasetPtr data(d);
    TruthPtr truth(t);
    check(ahb_dataset_write_csv(data.get(), join(c.common.out_dir, "data.csv").c_str()), "writing data");
    check(ahb_truth_write_csv(truth.get(), data.get(), join(c.common.out_dir, "truth.csv").c_str()),
          "writing truth");
  } else if (manifest.contains("study")) {
    out["study"] = manifest["study"];
    Json cfg = out["study"];
    cfg["workers"] = c.common.workers;
    check(ahb_simulation_study(cfg.dump().c_str(), join(c.common.out_dir, "results.csv").c_str(),
                               join(c.common.out_dir, "summary.csv").c_str()),
          "simulation study");
  } else if (manifest.contains("coverage")) {
    out["coverage"] = manifest["coverage"];
    Json cfg = out["coverage"];
    cfg["workers"] = c.common.workers;
    check(ahb_coverage_study(cfg.dump().c_str(), join(c.common.out_dir, "coverage.csv").c_str()),
          "coverage study");
  } else {
    fail(AHB_ERR_CONFIG, "manifest names no simulation");
  }
  write_json(join(c.common.out_dir, "run-manifest.json"), out);
  return kExitOk;
}

// ---- report ----

struct ReportCommand {
  std::string run_dir;
  std::string compare;
  std::string cate_column;
  int bins = 4;
  std::string output;
};

int cmd_report(const ReportCommand& c) {
  const Json manifest = read_json(join(c.run_dir, "run-manifest.json"));
  if (!manifest.contains("inputs")) fail(AHB_ERR_CONFIG, "report needs a match or intervals run");
  const DatasetPtr data = load_full(manifest["inputs"], nullptr);
  Json request = Json::object();
  if (!c.cate_column.empty()) {
    request["cate_column"] = c.cate_column;
    request["bins"] = c.bins;
  }
  char* s = nullptr;
  check(ahb_report(c.run_dir.c_str(), data.get(), c.compare.empty() ? nullptr : c.compare.c_str(),
                   request.dump().c_str(), &s),
        "report");
  const Json report = parse(take(s), "report");
  if (c.output.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json(c.output, report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive hyper-box matching for individual treatment effects"};
  app.set_version_flag("--version", std::string(ahb_version()));
  app.require_subcommand(1);

  MatchCommand match;
  auto* m = app.add_subcommand("match", "Build boxes and estimate effects for every unit");
  add_common(m, match.common, match.tracked);
  add_inputs(m, match.inputs, match.tracked, false);
  add_match_flags(m, match.match, match.tracked);

  IntervalCommand iv;
  auto* i = app.add_subcommand("intervals", "Match, then compute per-unit confidence intervals");
  add_common(i, iv.common, iv.tracked);
  add_inputs(i, iv.inputs, iv.tracked, false);
  add_match_flags(i, iv.match, iv.tracked);
  iv.tracked.add(i, "--method", iv.methods,
                 "na_ensemble, na_true, na_conservative, bootstrap, subsample, posterior");
  iv.tracked.add(i, "--level", iv.levels, "Confidence level(s)");
  iv.tracked.add(i, "--resamples", iv.resamples, "Bootstrap/subsample draws");
  iv.tracked.add(i, "--subsample-fraction", iv.subsample_fraction, "Subsample share per arm");
  iv.tracked.flag(i, "--no-rescale", iv.no_rescale, "Use raw subsample percentiles");
  iv.tracked.add(i, "--true-variance", iv.true_variance, "Noise variance for na_true");
  iv.tracked.flag(i, "--coverage", iv.coverage, "Write coverage against the true effects instead");
  iv.tracked.add(i, "--truth", iv.truth, "Truth CSV (id, h, ...) for --coverage");

  TuneCommand tune;
  tune.inputs.train_fraction = 0.5;
  tune.inputs.validation_fraction = 0.25;
  auto* t = app.add_subcommand("tune", "Pick match options by validation loss");
  add_common(t, tune.common, tune.tracked);
  add_inputs(t, tune.inputs, tune.tracked, true);
  tune.tracked.add(t, "--grid", tune.grid, "Grid JSON: array of option objects or object of arrays");

  SimulateCommand sim;
  auto* s = app.add_subcommand("simulate", "Run simulation studies or draw a dataset");
  add_common(s, sim.common, sim.tracked);
  sim.tracked.add(s, "--config", sim.study, "Study JSON (scenarios x methods x replicates)");
  sim.tracked.add(s, "--coverage-config", sim.coverage, "Coverage study JSON");
  sim.tracked.add(s, "--dgp", sim.dgp, "Simulation config JSON; writes data.csv and truth.csv");

  ReportCommand report;
  auto* r = app.add_subcommand("report", "Summarize a match run");
  r->add_option("--run-dir", report.run_dir, "Output directory of a match run")->required();
  r->add_option("--compare", report.compare, "Second run directory for mutual membership");
  r->add_option("--cate-column", report.cate_column, "Covariate for binned CATE");
  r->add_option("--bins", report.bins, "Number of CATE bins")->check(CLI::PositiveNumber);
  r->add_option("--output", report.output, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*m) return cmd_match(match);
    if (*i) return cmd_intervals(iv);
    if (*t) return cmd_tune(tune);
    if (*s) return cmd_simulate(sim, *s);
    if (*r) return cmd_report(report);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
