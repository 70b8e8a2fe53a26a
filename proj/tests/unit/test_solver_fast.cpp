#include "doctest.h"

#include <cmath>

#include "ahb/errors.hpp"
#include "ahb/simulation.hpp"
#include "ahb/solver_fast.hpp"
#include "ahb/solver_mip.hpp"
#include "generators.hpp"

using namespace ahb;

namespace {

Dataset line(const std::vector<double>& x, const std::vector<int>& t) {
  std::vector<std::vector<double>> rows;
  for (double v : x) rows.push_back({v});
  return Dataset::from_rows(rows, t);
}

HyperBox box(std::vector<double> lo, std::vector<double> hi) {
  return HyperBox{std::move(lo), std::move(hi), 0};
}

std::vector<ColumnMeta> continuous(std::size_t p) {
  std::vector<ColumnMeta> cols;
  for (std::size_t j = 0; j < p; ++j) cols.push_back({"x" + std::to_string(j + 1), ColumnKind::kContinuous});
  return cols;
}

const testing::FunctionModel kConstant([](std::span<const double>, Arm arm) {
  return arm == Arm::kTreated ? 3.0 : 1.0;
});

bool nested(const HyperBox& inner, const HyperBox& outer) {
  for (std::size_t j = 0; j < inner.dims(); ++j) {
    if (outer.lower[j] > inner.lower[j] || outer.upper[j] < inner.upper[j]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("equal gaps expand downward") {
  const Dataset d = line({0.0, 0.4, 0.5, 0.9}, {0, 1, 0, 1});
  const auto target = nearest_expansion_target(box({0.4}, {0.5}), 0, d);
  REQUIRE(target);
  CHECK(target->direction == Direction::kDown);
  CHECK(target->unit == 0);
  CHECK(target->value == 0.0);
}

TEST_CASE("no target once every unit is inside along the axis") {
  const Dataset d = line({0.0, 0.4, 0.5, 0.9}, {0, 1, 0, 1});
  CHECK_FALSE(nearest_expansion_target(box({0.0}, {0.9}), 0, d));
}

TEST_CASE("the smaller gap wins") {
  const Dataset d = line({0.3, 0.4, 0.7}, {0, 1, 0});
  const auto target = nearest_expansion_target(box({0.4}, {0.5}), 0, d);
  REQUIRE(target);
  CHECK(target->direction == Direction::kDown);
  CHECK(target->unit == 0);

  const Dataset dup = line({0.2, 0.9, 0.2, 0.5}, {0, 1, 0, 1});
  const auto lowest = nearest_expansion_target(box({0.5}, {0.5}), 0, dup);
  REQUIRE(lowest);
  CHECK(lowest->unit == 0);
}

TEST_CASE("grid variation of a constant model is zero") {
  CHECK(grid_variation(box({0.2, 0.2}, {0.3, 0.5}), box({0.2, 0.2}, {0.9, 0.5}), kConstant, 5,
                       continuous(2)) == 0.0);
  // A slab of zero width on the grown axis.
  const testing::FunctionModel slope([](std::span<const double> x, Arm) { return x[0]; });
  CHECK(grid_variation(box({0.2}, {0.3}), box({0.2}, {0.3}), slope, 5, continuous(1)) == 0.0);
}

TEST_CASE("grid variation of a linear surface matches the progression variance") {
  // G evenly spaced values over width w: variance w^2 (G + 1) / (12 (G - 1)).
  const testing::FunctionModel slope([](std::span<const double> x, Arm arm) {
    return arm == Arm::kControl ? x[0] : 7.0;
  });
  for (int g : {2, 3, 5, 9}) {
    for (double w : {0.1, 0.4, 1.5}) {
      const double expected = w * w * (g + 1) / (12.0 * (g - 1));
      const double one_d = grid_variation(box({0.2}, {0.2}), box({0.2}, {0.2 + w}), slope, g, continuous(1));
      CHECK(one_d == doctest::Approx(expected).epsilon(1e-12));
      // Other axes replicate the same values.
      const double two_d = grid_variation(box({0.5, 0.0}, {0.5, 1.0}), box({0.5 - w, 0.0}, {0.5, 1.0}),
                                          slope, g, continuous(2));
      CHECK(two_d == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("binary axes grid only their endpoints") {
  std::vector<ColumnMeta> cols{{"w1", ColumnKind::kBinary}};
  const testing::FunctionModel id([](std::span<const double> x, Arm) { return x[0]; });
  // Values {0, 1}: population variance 1/4 for f0 and again for f1.
  CHECK(grid_variation(box({0.0}, {0.0}), box({0.0}, {1.0}), id, 5, cols) == 0.5);
}

TEST_CASE("constant model grows the box to the bounding box") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<int> t;
  for (int k = 0; k < 10; ++k) {
    rows.push_back({u(rng), u(rng)});
    t.push_back(k % 2);
  }
  const Dataset d = Dataset::from_rows(rows, t);
  const HyperBox all = tight_box(make_group(0, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, d), d);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto s = fast_box(i, d, kConstant, FastParams{});
    CHECK(s.box.lower == all.lower);
    CHECK(s.box.upper == all.upper);
    CHECK(s.group.size() == 10);
    CHECK_FALSE(s.optimal);
  }
}

TEST_CASE("a step in the outcome stops the expansion") {
  // Controls at 1/8, 3/8, 3/4, 1; treated owner at 1/4 and another treated at 7/8.
  const Dataset d = line({0.125, 0.25, 0.375, 0.75, 0.875, 1.0}, {0, 1, 0, 0, 1, 0});
  const testing::FunctionModel step([](std::span<const double> x, Arm) { return x[0] > 0.5 ? 1.0 : 0.0; });
  std::vector<FastStep> trace;
  const auto s = fast_box(1, d, step, FastParams{}, &trace);
  // Down to 1/8 (tie goes down), then up to 3/8, then the slab up to 3/4 crosses the step.
  CHECK(s.box.lower == std::vector<double>{0.125});
  CHECK(s.box.upper == std::vector<double>{0.375});
  CHECK(s.group.members == std::vector<std::size_t>{0, 1, 2});
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0].direction == Direction::kDown);
  CHECK(trace[1].direction == Direction::kUp);
}

TEST_CASE("fast boxes contain the owner, m controls and nest step by step") {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const testing::FunctionModel smooth([](std::span<const double> x, Arm arm) {
    double v = 0.0;
    for (double c : x) v += c * c;
    return arm == Arm::kTreated ? v + x[0] : v;
  });
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 1 + trial % 3;
    std::vector<std::vector<double>> rows;
    std::vector<int> t;
    for (int k = 0; k < 30; ++k) {
      std::vector<double> r;
      for (std::size_t j = 0; j < p; ++j) r.push_back(u(rng));
      rows.push_back(r);
      t.push_back(u(rng) < 0.4);
    }
    const Dataset d = Dataset::from_rows(rows, t);
    FastParams params;
    params.m = 1 + trial % 4;
    params.c = 1.0 + trial % 3;
    for (std::size_t i = 0; i < d.n(); i += 7) {
      std::vector<FastStep> trace;
      BoxSolution s;
      try {
        s = fast_box(i, d, smooth, params, &trace);
      } catch (const InfeasibleError&) {
        continue;
      }
      CHECK(s.group.contains(i));
      CHECK(s.group.n_control >= static_cast<std::size_t>(params.m));
      CHECK(s.group.count(d.treated(i) ? Arm::kControl : Arm::kTreated) >= 1);
      HyperBox previous = point_box(d, i);
      for (const auto& step : trace) {
        CHECK(nested(previous, step.box));
        previous = step.box;
      }
      CHECK(nested(previous, s.box));
      CHECK(s.group == mmg(s.box, d));
    }
  }
}

TEST_CASE("fast solver is deterministic across worker counts") {
  Rng rng(23);
  const auto inst = testing::random_instance(rng, 30, 2, false);
  const testing::FunctionModel wave([](std::span<const double> x, Arm arm) {
    return std::sin(4 * x[0]) + (arm == Arm::kTreated ? x[1] : 0.0);
  });
  const auto a = fast_all(inst.data, wave, FastParams{}, 1);
  const auto b = fast_all(inst.data, wave, FastParams{}, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a[k].ok() == b[k].ok());
    if (!a[k].ok()) continue;
    CHECK(a[k].solution->box == b[k].solution->box);
    CHECK(a[k].solution->objective == b[k].solution->objective);
  }
}

TEST_CASE("too few controls is infeasible") {
  const Dataset d = line({0.0, 0.5, 1.0}, {1, 0, 1});
  FastParams params;
  params.m = 2;
  CHECK_THROWS_AS(fast_box(0, d, kConstant, params), InfeasibleError);
  FastParams bad;
  bad.grid_points = 1;
  CHECK_THROWS_AS(fast_box(0, d, kConstant, bad), ConfigError);
  bad = FastParams{};
  bad.c = 0.5;
  CHECK_THROWS_AS(fast_box(0, d, kConstant, bad), ConfigError);
}

TEST_CASE("external predictions cannot drive the fast solver") {
  const auto model = external_model_from_table(csv::parse("id,f0,f1\nu0,1,2\nu1,1,2\n"));
  const Dataset d = line({0.0, 1.0}, {1, 0});
  CHECK_THROWS_AS(fast_box(0, d, *model, FastParams{}), UnavailableError);
}

TEST_CASE("on binary covariates fast and exact build the same groups") {
  for (auto h : {FunctionKind::kConst, FunctionKind::kBinary}) {
    DgpConfig config;
    config.p_c = 0;
    config.p_d = 4;
    config.n_confounding = 1;
    config.n_treatment = 1;
    config.n_irrelevant = 2;
    config.g_kind = FunctionKind::kBinary;
    config.h_kind = h;
    config.n = 80;
    config.seed = 5;
    const auto sim = generate(config);
    const auto oracle = oracle_model(sim.truth.functions);
    const auto predictions = predict_units(*oracle, sim.data);
    // beta = 1 with unit weights makes a unit of differing w2 cost exactly
    // the reward, so the exact optimum is tied; 0.5 keeps it unique.
    SolverParams params;
    params.weights.beta = 0.5;
    FastParams fast_params;
    fast_params.weights = params.weights;
    const auto exact = solve_all(sim.data, predictions, params, 1);
    const auto fast = fast_all(sim.data, *oracle, fast_params, 1);
    for (std::size_t k = 0; k < exact.size(); ++k) {
      REQUIRE(exact[k].ok() == fast[k].ok());
      if (!exact[k].ok()) continue;
      CHECK(exact[k].solution->group == fast[k].solution->group);
    }
  }
}
