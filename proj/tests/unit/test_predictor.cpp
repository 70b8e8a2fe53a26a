#include "doctest.h"

#include <cmath>
#include <numeric>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/predictor.hpp"
#include "generators.hpp"

using namespace ahb;

namespace {

Dataset grid_data(std::size_t n, double (*f)(double)) {
  std::vector<std::vector<double>> rows;
  std::vector<int> t;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    rows.push_back({x});
    t.push_back(static_cast<int>(i % 2));
    y.push_back(f(x));
  }
  return Dataset::from_rows(rows, t, y);
}

double identity(double x) { return x; }
double five(double) { return 5.0; }
double wave(double x) { return std::sin(6.0 * x); }

double heldout_rmse(const OutcomeModel& model) {
  double ss = 0.0;
  int count = 0;
  for (int i = 0; i < 97; ++i) {
    const double x = (i + 0.5) / 97.0;
    for (Arm arm : {Arm::kControl, Arm::kTreated}) {
      const double e = model.predict(std::vector<double>{x}, arm) - wave(x);
      ss += e * e;
      ++count;
    }
  }
  return std::sqrt(ss / count);
}

CovariateFunction fn(FunctionKind kind, std::vector<std::size_t> cols = {0, 1}) {
  CovariateFunction f;
  f.kind = kind;
  f.continuous_columns = std::move(cols);
  return f;
}

}  // namespace

TEST_CASE("constant outcomes give a constant fit") {
  const auto model = fit_builtin(grid_data(60, five), {});
  for (double x : {0.0, 0.3, 0.9, 2.0}) {
    CHECK(model->predict(std::vector<double>{x}, Arm::kControl) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(model->predict(std::vector<double>{x}, Arm::kTreated) == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("Y = x1 on a 200-unit grid is recovered at the midpoint") {
  EnsembleConfig config;
  config.trees = 100;
  config.seed = 3;
  const auto model = fit_builtin(grid_data(200, identity), config);
  for (Arm arm : {Arm::kControl, Arm::kTreated}) {
    CHECK(std::abs(model->predict(std::vector<double>{0.5}, arm) - 0.5) <= 0.15);
  }
}

TEST_CASE("ensemble mean equals the point prediction") {
  EnsembleConfig config;
  config.trees = 37;
  config.seed = 11;
  const auto model = fit_builtin(grid_data(120, wave), config);
  REQUIRE(model->has_ensemble());
  CHECK(model->ensemble_size() == 37);
  for (double x : {0.05, 0.33, 0.71}) {
    for (Arm arm : {Arm::kControl, Arm::kTreated}) {
      const auto members = model->ensemble_predict(std::vector<double>{x}, arm);
      REQUIRE(members.size() == 37);
      const double mean = std::accumulate(members.begin(), members.end(), 0.0) / 37.0;
      CHECK(std::abs(mean - model->predict(std::vector<double>{x}, arm)) <= 1e-9);
    }
  }
}

TEST_CASE("fitting is deterministic and needs two units per arm") {
  EnsembleConfig config;
  config.seed = 8;
  config.trees = 20;
  const Dataset d = grid_data(80, wave);
  const auto a = fit_builtin(d, config);
  const auto b = fit_builtin(d, config);
  for (double x : {0.1, 0.5, 0.8}) {
    CHECK(a->predict(std::vector<double>{x}, Arm::kTreated) ==
          b->predict(std::vector<double>{x}, Arm::kTreated));
  }

  const Dataset one_treated = Dataset::from_rows({{0.0}, {1.0}, {2.0}}, {0, 0, 1}, std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(fit_builtin(one_treated, config), FitError);
  CHECK_THROWS_AS(fit_builtin(d.without_outcomes(), config), FitError);
}

TEST_CASE("more trees do not hurt held-out error beyond noise") {
  const Dataset d = grid_data(200, wave);
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    EnsembleConfig config;
    config.seed = seed;
    config.trees = 10;
    small += heldout_rmse(*fit_builtin(d, config));
    config.trees = 100;
    large += heldout_rmse(*fit_builtin(d, config));
  }
  CHECK(large <= small * 1.1);
}

TEST_CASE("oracle model returns g and g + h") {
  TruthFunctions quad{fn(FunctionKind::kQuad), fn(FunctionKind::kConst)};
  const auto oracle = oracle_model(quad);
  const std::vector<double> x{0.5, 0.5};
  CHECK(oracle->predict(x, Arm::kControl) == 0.5);
  CHECK_FALSE(oracle->has_ensemble());

  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TruthFunctions zero{fn(FunctionKind::kNone), fn(FunctionKind::kConst)};
  const auto none = oracle_model(zero);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> z{u(rng), u(rng)};
    CHECK(oracle->predict(z, Arm::kTreated) - oracle->predict(z, Arm::kControl) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(none->predict(z, Arm::kControl) == 0.0);
  }
}

TEST_CASE("covariate functions follow their definitions") {
  const std::vector<double> x{0.2, 0.7, 1.0};
  CHECK(fn(FunctionKind::kBox)(x) == 1.0);
  CHECK(fn(FunctionKind::kLinear)(x) == doctest::Approx(0.9));
  CHECK(fn(FunctionKind::kQuad, {0, 1})(std::vector<double>{1.0, 1.0}) == 2.0);
  CovariateFunction binary;
  binary.kind = FunctionKind::kBinary;
  binary.binary_columns = {2};
  CHECK(binary(x) == 1.0);
  CovariateFunction mixed;
  mixed.kind = FunctionKind::kMixed;
  mixed.continuous_columns = {0};
  mixed.binary_columns = {2};
  CHECK(mixed(x) == doctest::Approx(1.2));
  CHECK(parse_function_kind("Quad") == FunctionKind::kQuad);
  CHECK(to_string(FunctionKind::kMixed) == "Mixed");
  CHECK_THROWS_AS(parse_function_kind("Cubic"), ConfigError);
}

TEST_CASE("external predictions are looked up by unit id") {
  const auto table = csv::parse("id,f0,f1\nu1,1.0,3.0\nu2,0.5,0.25\n");
  const auto model = external_model_from_table(table);
  CHECK(model->predict_id("u1", Arm::kTreated) == 3.0);
  CHECK(model->predict_id("u1", Arm::kControl) == 1.0);
  CHECK_THROWS_AS(model->predict_id("u9", Arm::kTreated), UnavailableError);
  CHECK_FALSE(model->supports_points());
  CHECK_THROWS_AS(model->predict(std::vector<double>{0.0}, Arm::kControl), UnavailableError);
  CHECK_FALSE(model->has_ensemble());

  const Dataset d = Dataset::from_rows({{0.0}, {1.0}}, {0, 1});
  // Dataset::from_rows names rows u0, u1.
  CHECK(model->predict_unit(d, 1, Arm::kTreated) == 3.0);
  CHECK_THROWS_AS(model->predict_unit(d, 0, Arm::kTreated), UnavailableError);
}

TEST_CASE("external draw columns enable the ensemble") {
  std::string header = "id,f0,f1";
  for (int b = 1; b <= 50; ++b) header += ",f0_draw_" + std::to_string(b);
  for (int b = 1; b <= 50; ++b) header += ",f1_draw_" + std::to_string(b);
  std::string row = "u1,1,3";
  for (int b = 1; b <= 50; ++b) row += "," + std::to_string(b);
  for (int b = 1; b <= 50; ++b) row += "," + std::to_string(100 + b);
  const auto dir = testing::scratch_dir("external");
  const auto path = testing::write_file(dir + "/p.csv", header + "\n" + row + "\n");
  const auto model = external_model(path);
  REQUIRE(model->has_ensemble());
  CHECK(model->ensemble_size() == 50);
  const auto draws = model->ensemble_predict_id("u1", Arm::kTreated);
  REQUIRE(draws.size() == 50);
  CHECK(draws.front() == 101.0);
  CHECK(draws.back() == 150.0);
}

TEST_CASE("malformed external files are rejected") {
  CHECK_THROWS_AS(external_model_from_table(csv::parse("id,f0\nu1,1\n")), ParseError);
  CHECK_THROWS_AS(external_model_from_table(csv::parse("id,f0,f1\nu1,1,abc\n")), ParseError);
  CHECK_THROWS_AS(external_model_from_table(csv::parse("id,f0,f1\nu1,1,2\nu1,3,4\n")), ParseError);
  CHECK_THROWS_AS(external_model("/nonexistent/predictions.csv"), IoError);
}

TEST_CASE("predict_units evaluates both arms once per row") {
  const testing::FunctionModel model([](std::span<const double> x, Arm arm) {
    return x[0] + (arm == Arm::kTreated ? 10.0 : 0.0);
  });
  const Dataset d = Dataset::from_rows({{1.0}, {2.0}, {3.0}}, {0, 1, 0});
  const auto p = predict_units(model, d);
  CHECK(p.f0 == std::vector<double>{1, 2, 3});
  CHECK(p.f1 == std::vector<double>{11, 12, 13});
  CHECK(p.at(1, Arm::kTreated) == 12.0);
}
