#include "ahb/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ahb/errors.hpp"

namespace ahb {

namespace {

void check_keys(const Json& json, const std::set<std::string>& allowed, const std::string& what) {
  if (!json.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& item : json.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + what);
    }
  }
}

template <class T>
void read(const Json& json, const char* key, T& out, const std::string& what) {
  auto it = json.find(key);
  if (it == json.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "' in " + what);
  }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str());
}

Json match_options_to_json(const MatchOptions& o) {
  Json j;
  j["solver"] = to_string(o.solver);
  j["gamma0"] = o.params.weights.gamma0;
  j["gamma1"] = o.params.weights.gamma1;
  j["beta"] = o.params.weights.beta;
  j["m"] = o.params.m;
  j["normalize"] = o.params.normalize;
  j["preprocess"] = o.params.preprocess.to_string();
  j["exclude_same_arm"] = o.params.exclude_same_arm;
  j["c"] = o.c;
  j["grid"] = o.grid_points;
  j["eps_abs"] = optional_number(o.eps_abs);
  return j;
}

MatchOptions match_options_from_json(const Json& json) {
  const std::string what = "match options";
  check_keys(json, {"solver", "gamma0", "gamma1", "beta", "m", "normalize", "preprocess",
                    "exclude_same_arm", "c", "grid", "eps_abs"},
             what);
  MatchOptions o;
  std::string solver = to_string(o.solver);
  read(json, "solver", solver, what);
  o.solver = parse_solver(solver);
  read(json, "gamma0", o.params.weights.gamma0, what);
  read(json, "gamma1", o.params.weights.gamma1, what);
  read(json, "beta", o.params.weights.beta, what);
  read(json, "m", o.params.m, what);
  read(json, "normalize", o.params.normalize, what);
  std::string pre = "none";
  read(json, "preprocess", pre, what);
  o.params.preprocess = Preprocess::parse(pre);
  read(json, "exclude_same_arm", o.params.exclude_same_arm, what);
  read(json, "c", o.c, what);
  read(json, "grid", o.grid_points, what);
  if (json.contains("eps_abs") && !json["eps_abs"].is_null()) {
    double eps = 0.0;
    read(json, "eps_abs", eps, what);
    o.eps_abs = eps;
  }
  if (o.params.m < 1) throw ConfigError("m must be at least 1");
  if (o.params.weights.gamma0 < 0 || o.params.weights.gamma1 < 0 || o.params.weights.beta < 0) {
    throw ConfigError("gamma0, gamma1 and beta must be nonnegative");
  }
  if (!(o.c >= 1.0)) throw ConfigError("c must be at least 1");
  if (o.grid_points < 2) throw ConfigError("grid must be at least 2");
  return o;
}

Json dgp_to_json(const DgpConfig& c) {
  Json j;
  j["p_c"] = c.p_c;
  j["p_d"] = c.p_d;
  j["roles"] = {c.n_confounding, c.n_treatment, c.n_irrelevant};
  j["g"] = to_string(c.g_kind);
  j["h"] = to_string(c.h_kind);
  j["gamma"] = c.gamma ? Json(*c.gamma) : Json(nullptr);
  j["sigma"] = c.sigma;
  j["n"] = c.n;
  j["seed"] = c.seed;
  return j;
}

DgpConfig dgp_from_json(const Json& json) {
  const std::string what = "scenario";
  check_keys(json, {"p_c", "p_d", "roles", "g", "h", "gamma", "sigma", "n", "seed"}, what);
  DgpConfig c;
  read(json, "p_c", c.p_c, what);
  read(json, "p_d", c.p_d, what);
  if (json.contains("roles")) {
    std::vector<int> roles;
    read(json, "roles", roles, what);
    if (roles.size() != 3) throw ConfigError("roles must list (confounding, treatment, irrelevant)");
    c.n_confounding = roles[0];
    c.n_treatment = roles[1];
    c.n_irrelevant = roles[2];
  }
  std::string g = to_string(c.g_kind), h = to_string(c.h_kind);
  read(json, "g", g, what);
  read(json, "h", h, what);
  c.g_kind = parse_function_kind(g);
  c.h_kind = parse_function_kind(h);
  if (json.contains("gamma") && !json["gamma"].is_null()) {
    std::vector<double> gamma;
    read(json, "gamma", gamma, what);
    c.gamma = gamma;
  }
  read(json, "sigma", c.sigma, what);
  read(json, "n", c.n, what);
  read(json, "seed", c.seed, what);
  dgp_layout(c);
  return c;
}

Json schema_to_json(const Schema& s) {
  Json j;
  j["covariates"] = s.covariates;
  j["treatment"] = s.treatment;
  j["outcome"] = s.outcome;
  j["outcome_optional"] = s.outcome_optional;
  j["id"] = s.id ? Json(*s.id) : Json(nullptr);
  Json cats = Json::array();
  for (const auto& c : s.categoricals) cats.push_back({{"column", c.column}, {"levels", c.levels}});
  j["categoricals"] = cats;
  j["continuous"] = s.continuous;
  return j;
}

Schema schema_from_json(const Json& json) {
  const std::string what = "schema";
  check_keys(json, {"covariates", "treatment", "outcome", "outcome_optional", "id", "categoricals",
                    "continuous"},
             what);
  Schema s;
  read(json, "covariates", s.covariates, what);
  read(json, "treatment", s.treatment, what);
  read(json, "outcome", s.outcome, what);
  read(json, "outcome_optional", s.outcome_optional, what);
  if (json.contains("id") && !json["id"].is_null()) {
    std::string id;
    read(json, "id", id, what);
    s.id = id;
  }
  if (json.contains("categoricals")) {
    const auto& cats = json["categoricals"];
    if (!cats.is_array()) throw ConfigError("categoricals must be an array");
    for (const auto& c : cats) {
      check_keys(c, {"column", "levels"}, "categorical spec");
      CategoricalSpec spec;
      read(c, "column", spec.column, "categorical spec");
      read(c, "levels", spec.levels, "categorical spec");
      s.categoricals.push_back(std::move(spec));
    }
  }
  read(json, "continuous", s.continuous, what);
  return s;
}

Json ensemble_to_json(const EnsembleConfig& c) {
  return Json{{"trees", c.trees}, {"max_depth", c.max_depth}, {"min_leaf", c.min_leaf},
              {"seed", c.seed}};
}

EnsembleConfig ensemble_from_json(const Json& json) {
  const std::string what = "predictor options";
  check_keys(json, {"trees", "max_depth", "min_leaf", "seed"}, what);
  EnsembleConfig c;
  read(json, "trees", c.trees, what);
  read(json, "max_depth", c.max_depth, what);
  read(json, "min_leaf", c.min_leaf, what);
  read(json, "seed", c.seed, what);
  if (c.trees < 1 || c.max_depth < 0 || c.min_leaf < 1) {
    throw ConfigError("trees and min_leaf must be positive, max_depth nonnegative");
  }
  return c;
}

Json resampling_to_json(const ResamplingConfig& c) {
  return Json{{"resamples", c.resamples},
              {"subsample_fraction", c.subsample_fraction},
              {"rescale_subsample", c.rescale_subsample},
              {"seed", c.seed}};
}

ResamplingConfig resampling_from_json(const Json& json) {
  const std::string what = "resampling options";
  check_keys(json, {"resamples", "subsample_fraction", "rescale_subsample", "seed"}, what);
  ResamplingConfig c;
  read(json, "resamples", c.resamples, what);
  read(json, "subsample_fraction", c.subsample_fraction, what);
  read(json, "rescale_subsample", c.rescale_subsample, what);
  read(json, "seed", c.seed, what);
  if (c.resamples < 1) throw ConfigError("resamples must be positive");
  if (!(c.subsample_fraction > 0.0 && c.subsample_fraction < 1.0)) {
    throw ConfigError("subsample_fraction must lie in (0, 1)");
  }
  return c;
}

namespace {

const std::set<std::string> kCommonKeys = {"replicates", "seed",      "ahb",
                                           "variant",    "predictor", "ensemble",
                                           "train_fraction", "workers"};

void common_to_json(const StudyCommon& c, Json& j) {
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["ahb"] = match_options_to_json(c.ahb);
  j["variant"] = to_string(c.variant);
  j["predictor"] = to_string(c.predictor);
  j["ensemble"] = ensemble_to_json(c.ensemble);
  j["train_fraction"] = c.train_fraction;
  j["workers"] = c.workers;
}

StudyCommon common_from_json(const Json& json, const std::string& what) {
  StudyCommon c;
  read(json, "replicates", c.replicates, what);
  read(json, "seed", c.seed, what);
  if (json.contains("ahb")) c.ahb = match_options_from_json(json["ahb"]);
  std::string variant = to_string(c.variant), predictor = to_string(c.predictor);
  read(json, "variant", variant, what);
  read(json, "predictor", predictor, what);
  c.variant = parse_variant(variant);
  c.predictor = parse_predictor_kind(predictor);
  if (json.contains("ensemble")) c.ensemble = ensemble_from_json(json["ensemble"]);
  read(json, "train_fraction", c.train_fraction, what);
  read(json, "workers", c.workers, what);
  if (c.replicates < 1) throw ConfigError("replicates must be positive");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (c.workers < 1) throw ConfigError("workers must be positive");
  return c;
}

Json scenario_to_json(const Scenario& s) { return Json{{"name", s.name}, {"dgp", dgp_to_json(s.dgp)}}; }

Scenario scenario_from_json(const Json& json) {
  check_keys(json, {"name", "dgp"}, "scenario entry");
  Scenario s;
  read(json, "name", s.name, "scenario entry");
  if (!json.contains("dgp")) throw ConfigError("scenario entry needs a 'dgp' object");
  s.dgp = dgp_from_json(json["dgp"]);
  if (s.name.empty()) s.name = to_string(s.dgp.g_kind) + "/" + to_string(s.dgp.h_kind);
  return s;
}

}  // namespace

Json study_config_to_json(const StudyConfig& config) {
  Json j;
  Json scenarios = Json::array();
  for (const auto& s : config.scenarios) scenarios.push_back(scenario_to_json(s));
  j["scenarios"] = scenarios;
  j["methods"] = config.methods;
  common_to_json(config.common, j);
  return j;
}

StudyConfig study_config_from_json(const Json& json) {
  const std::string what = "study config";
  auto allowed = kCommonKeys;
  allowed.insert({"scenarios", "methods"});
  check_keys(json, allowed, what);
  StudyConfig config;
  if (!json.contains("scenarios") || !json["scenarios"].is_array() || json["scenarios"].empty()) {
    throw ConfigError("study config needs a non-empty 'scenarios' array");
  }
  for (const auto& s : json["scenarios"]) config.scenarios.push_back(scenario_from_json(s));
  read(json, "methods", config.methods, what);
  if (config.methods.empty()) throw ConfigError("study config needs a non-empty 'methods' array");
  validate_study_methods(config.methods);
  config.common = common_from_json(json, what);
  return config;
}

Json coverage_config_to_json(const CoverageConfig& config) {
  Json j;
  j["scenario"] = scenario_to_json(config.scenario);
  Json methods = Json::array();
  for (auto m : config.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["level"] = config.level;
  j["resampling"] = resampling_to_json(config.resampling);
  common_to_json(config.common, j);
  return j;
}

CoverageConfig coverage_config_from_json(const Json& json) {
  const std::string what = "coverage config";
  auto allowed = kCommonKeys;
  allowed.insert({"scenario", "methods", "level", "resampling"});
  check_keys(json, allowed, what);
  CoverageConfig config;
  if (!json.contains("scenario")) throw ConfigError("coverage config needs a 'scenario' object");
  config.scenario = scenario_from_json(json["scenario"]);
  std::vector<std::string> methods;
  read(json, "methods", methods, what);
  if (methods.empty()) {
    config.methods = all_interval_methods();
  } else {
    for (const auto& m : methods) config.methods.push_back(parse_interval_method(m));
  }
  read(json, "level", config.level, what);
  if (!(config.level > 0.0 && config.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (json.contains("resampling")) config.resampling = resampling_from_json(json["resampling"]);
  config.common = common_from_json(json, what);
  return config;
}

}  // namespace ahb
