#include "doctest.h"

#include "ahb/config.hpp"
#include "ahb/errors.hpp"
#include "generators.hpp"

using namespace ahb;

TEST_CASE("match options round trip") {
  MatchOptions o;
  o.solver = SolverKind::kFast;
  o.params.weights = {0.5, 0.0, 2.0};
  o.params.m = 3;
  o.params.normalize = true;
  o.params.preprocess = Preprocess::sort(40);
  o.params.exclude_same_arm = true;
  o.c = 1.5;
  o.grid_points = 7;
  o.eps_abs = 1e-9;
  const Json j = match_options_to_json(o);
  CHECK(match_options_to_json(match_options_from_json(j)) == j);
  CHECK(j["solver"] == "fast");
  CHECK(j["preprocess"] == "sort:40");
}

TEST_CASE("readers start from defaults and reject unknown keys") {
  const auto o = match_options_from_json(parse_json(R"({"m": 2})"));
  CHECK(o.params.m == 2);
  CHECK(o.params.weights.beta == MatchOptions{}.params.weights.beta);
  CHECK_THROWS_AS(match_options_from_json(parse_json(R"({"gama0": 1})")), ConfigError);
  CHECK_THROWS_AS(match_options_from_json(parse_json(R"({"m": "two"})")), ConfigError);
  CHECK_THROWS_AS(match_options_from_json(parse_json(R"({"m": 0})")), ConfigError);
  CHECK_THROWS_AS(match_options_from_json(parse_json(R"({"c": 0.5})")), ConfigError);
  CHECK_THROWS_AS(match_options_from_json(parse_json("[1, 2]")), ConfigError);
  CHECK_THROWS_AS(parse_json("{not json"), ParseError);
  CHECK_THROWS_AS(read_json_file("/nonexistent/config.json"), IoError);
}

TEST_CASE("dgp config round trip") {
  DgpConfig c;
  c.p_c = 2;
  c.p_d = 2;
  c.n_confounding = 2;
  c.n_treatment = 1;
  c.n_irrelevant = 1;
  c.g_kind = FunctionKind::kMixed;
  c.h_kind = FunctionKind::kBinary;
  c.gamma = std::vector<double>{1.0, 0.5, 0.0, 0.25};
  c.sigma = 0.25;
  c.n = 123;
  c.seed = 99;
  const Json j = dgp_to_json(c);
  const auto back = dgp_from_json(j);
  CHECK(dgp_to_json(back) == j);
  CHECK(back.gamma == c.gamma);
  CHECK_THROWS_AS(dgp_from_json(parse_json(R"({"g": "Cubic"})")), ConfigError);
}

TEST_CASE("schema, ensemble and resampling round trip") {
  Schema s;
  s.covariates = {"age", "school"};
  s.treatment = "treat";
  s.outcome = "re78";
  s.outcome_optional = true;
  s.id = "id";
  s.categoricals = {{"school", {"hs", "college"}}};
  const Json js = schema_to_json(s);
  CHECK(schema_to_json(schema_from_json(js)) == js);

  EnsembleConfig e;
  e.trees = 17;
  e.max_depth = 3;
  e.min_leaf = 2;
  e.seed = 5;
  CHECK(ensemble_to_json(ensemble_from_json(ensemble_to_json(e))) == ensemble_to_json(e));
  CHECK_THROWS_AS(ensemble_from_json(parse_json(R"({"trees": 0})")), ConfigError);

  ResamplingConfig r;
  r.resamples = 50;
  r.subsample_fraction = 0.5;
  r.rescale_subsample = false;
  r.seed = 8;
  CHECK(resampling_to_json(resampling_from_json(resampling_to_json(r))) == resampling_to_json(r));
  CHECK_THROWS_AS(resampling_from_json(parse_json(R"({"subsample_fraction": 1.0})")), ConfigError);
}

TEST_CASE("study and coverage configs round trip") {
  StudyConfig s;
  s.scenarios = {{"lin", DgpConfig{}}, {"quad", DgpConfig{}}};
  s.scenarios[1].dgp.g_kind = FunctionKind::kQuad;
  s.methods = {"mip", "naive", "mahal_nn:3"};
  s.common.replicates = 4;
  s.common.seed = 12;
  s.common.predictor = PredictorKind::kOracle;
  const Json js = study_config_to_json(s);
  CHECK(study_config_to_json(study_config_from_json(js)) == js);
  CHECK_THROWS_AS(study_config_from_json(parse_json(R"({"methods": ["mip"]})")), ConfigError);
  CHECK_THROWS_AS(study_config_from_json(parse_json(
                      R"({"scenarios": [{"name": "a", "dgp": {}}], "methods": ["mip"], "replicates": 0})")),
                  ConfigError);

  CoverageConfig c;
  c.scenario = {"linlin", DgpConfig{}};
  c.methods = {IntervalMethod::kSubsample, IntervalMethod::kNaConservative};
  c.level = 0.9;
  const Json jc = coverage_config_to_json(c);
  CHECK(coverage_config_to_json(coverage_config_from_json(jc)) == jc);
  const auto defaults = coverage_config_from_json(parse_json(R"({"scenario": {"name": "x", "dgp": {}}})"));
  CHECK(defaults.methods.size() == all_interval_methods().size());
}
