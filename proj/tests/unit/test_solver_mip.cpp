#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <limits>

#include "ahb/errors.hpp"
#include "ahb/solver_mip.hpp"
#include "generators.hpp"

using namespace ahb;

TEST_CASE("exact solver agrees with enumeration on random instances") {
  Rng rng(12345);
  std::uniform_int_distribution<int> n_dist(2, 15), p_dist(1, 3), m_dist(1, 2);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  int compared = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto inst = testing::random_instance(rng, n_dist(rng), p_dist(rng));
    SolverParams params;
    params.m = m_dist(rng);
    params.weights = {w(rng), w(rng), w(rng)};
    for (std::size_t i = 0; i < inst.data.n(); ++i) {
      std::optional<BoxSolution> exact, oracle;
      try { exact = solve_exact(i, inst.data, inst.predictions, params); } catch (const InfeasibleError&) {}
      try { oracle = brute_force_oracle(i, inst.data, inst.predictions, params); } catch (const InfeasibleError&) {}
      REQUIRE(exact.has_value() == oracle.has_value());
      if (!exact) continue;
      CHECK(exact->objective == oracle->objective);
      CHECK(exact->group == oracle->group);
      CHECK(exact->box == oracle->box);
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

namespace {

Dataset line(const std::vector<double>& x, const std::vector<int>& t) {
  std::vector<std::vector<double>> rows;
  for (double v : x) rows.push_back({v});
  return Dataset::from_rows(rows, t);
}

}  // namespace

TEST_CASE("unit cost examples") {
  const UnitPredictions p{{0.0, 1.0}, {0.0, 2.0}};
  CHECK(unit_cost(0, 0, p, {}) == 0.0);
  CHECK(unit_cost(0, 1, p, {}) == 3.0);
  CHECK(unit_cost(0, 1, p, {1.0, 0.0, 1.0}) == 1.0);
  CHECK(unit_costs(1, p, {2.0, 1.0, 0.0}) == std::vector<double>{4.0, 0.0});
}

TEST_CASE("objective examples") {
  const Dataset d = line({0.0, 1.0, 2.0}, {0, 1, 0});
  CHECK(objective(make_group(0, {0}, d), {0.0, 3.0, 1.0}, 1.0) == -1.0);
  CHECK(objective(make_group(0, {0, 1}, d), {0.0, 3.0, 1.0}, 0.5) == 2.0);
  CHECK(objective(make_group(0, {0, 1, 2}, d), {0.0, 0.0, 0.0}, 1.0) == -3.0);
}

TEST_CASE("preprocessing examples") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  std::vector<int> t;
  UnitPredictions p;
  for (int k = 0; k < 300; ++k) {
    x.push_back(u(rng));
    t.push_back(k % 3 == 0);
    p.f0.push_back(u(rng));
    p.f1.push_back(u(rng));
  }
  const Dataset d = line(x, t);

  SolverParams params;
  params.preprocess = Preprocess::sort(50);
  const auto kept = preprocess(4, d, p, params);
  std::size_t treated = 0, control = 0;
  for (auto k : kept) {
    if (k == 4) continue;
    (d.treated(k) ? treated : control) += 1;
  }
  CHECK(treated <= 50);
  CHECK(control <= 50);
  CHECK(std::find(kept.begin(), kept.end(), 4) != kept.end());
  // The kept controls are the 50 cheapest ones.
  const auto costs = unit_costs(4, p, params.weights);
  double worst_kept = 0.0, best_dropped = 1e300;
  for (std::size_t k = 0; k < d.n(); ++k) {
    if (k == 4 || d.treated(k)) continue;
    const bool in = std::binary_search(kept.begin(), kept.end(), k);
    (in ? worst_kept : best_dropped) =
        in ? std::max(worst_kept, costs[k]) : std::min(best_dropped, costs[k]);
  }
  CHECK(worst_kept <= best_dropped);

  params.preprocess = Preprocess::threshold_l(std::numeric_limits<double>::infinity());
  CHECK(preprocess(4, d, p, params).size() == 300);

  const Dataset two = Dataset::from_rows({{0.0, 0.0}, {0.6, 0.1}, {0.5, 0.5}}, {1, 0, 0});
  const UnitPredictions p3{{0, 0, 0}, {0, 0, 0}};
  params.preprocess = Preprocess::threshold_coord(0.5);
  CHECK(preprocess(0, two, p3, params) == std::vector<std::size_t>{0, 2});

  params.preprocess = Preprocess::threshold_coord(0.05);
  CHECK_THROWS_AS(preprocess(0, two, p3, params), InfeasibleError);

  CHECK(Preprocess::parse("sort:50").d == 50);
  CHECK(Preprocess::parse("threshold_coord:inf").epsilon == std::numeric_limits<double>::infinity());
  CHECK(Preprocess::parse("threshold_l:0.4").to_string() == "threshold_l:0.4");
  CHECK_THROWS_AS(Preprocess::parse("sort:abc"), ConfigError);
}

TEST_CASE("a single control candidate forces the box") {
  const Dataset d = Dataset::from_rows({{0.2, 0.9}, {0.7, 0.1}}, {1, 0});
  const UnitPredictions p{{0.0, 5.0}, {0.0, 5.0}};
  SolverParams params;
  params.weights.beta = 0.1;
  const auto s = solve_exact(0, d, p, params);
  CHECK(s.box.lower == std::vector<double>{0.2, 0.1});
  CHECK(s.box.upper == std::vector<double>{0.7, 0.9});
  CHECK(s.group.members == std::vector<std::size_t>{0, 1});
  CHECK(s.objective == doctest::Approx(10.0 - 0.2));
  CHECK(s.optimal);
}

TEST_CASE("a constant model puts every candidate in the box") {
  Rng rng(21);
  const auto inst = testing::random_instance(rng, 14, 3, true);
  const UnitPredictions flat{std::vector<double>(14, 2.0), std::vector<double>(14, 1.0)};
  SolverParams params;
  params.weights.beta = 0.5;
  for (std::size_t i = 0; i < inst.data.n(); ++i) {
    const auto s = solve_exact(i, inst.data, flat, params);
    CHECK(s.group.size() == 14);
    CHECK(s.objective == -7.0);
  }
}

TEST_CASE("solutions respect m and contain the owner") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_instance(rng, 6 + trial % 10, 1 + trial % 3);
    SolverParams params;
    params.m = 1 + trial % 3;
    params.weights.beta = 0.25 * (trial % 5);
    for (const auto& r : solve_all(inst.data, inst.predictions, params, 1)) {
      if (!r.ok()) continue;
      const auto& s = *r.solution;
      CHECK(s.group.contains(r.unit));
      CHECK(s.group.n_control >= static_cast<std::size_t>(params.m));
      CHECK(contains(s.box, inst.data.row(r.unit)));
      const auto costs = unit_costs(r.unit, inst.predictions, params.weights);
      CHECK(std::abs(objective(s.group, costs, params.weights.beta) - s.objective) <= 1e-9);
    }
  }
}

TEST_CASE("worker count does not change solutions") {
  Rng rng(41);
  const auto inst = testing::random_instance(rng, 40, 2, true);
  SolverParams params;
  params.m = 2;
  params.weights.beta = 0.7;
  const auto a = solve_all(inst.data, inst.predictions, params, 1);
  const auto b = solve_all(inst.data, inst.predictions, params, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].unit == b[k].unit);
    CHECK(a[k].error == b[k].error);
    REQUIRE(a[k].ok() == b[k].ok());
    if (!a[k].ok()) continue;
    CHECK(a[k].solution->box == b[k].solution->box);
    CHECK(a[k].solution->group == b[k].solution->group);
    CHECK(std::memcmp(&a[k].solution->objective, &b[k].solution->objective, sizeof(double)) == 0);
  }
}

TEST_CASE("one infeasible unit is recorded without stopping the rest") {
  std::vector<double> x{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 10.0};
  std::vector<int> t{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const Dataset d = line(x, t);
  UnitPredictions p;
  for (double v : x) {
    p.f0.push_back(v);
    p.f1.push_back(2 * v);
  }
  SolverParams params;
  params.preprocess = Preprocess::threshold_coord(1.0);
  const auto results = solve_all(d, p, params, 3);
  REQUIRE(results.size() == 10);
  std::size_t solved = 0;
  for (const auto& r : results) solved += r.ok() ? 1 : 0;
  CHECK(solved == 9);
  CHECK_FALSE(results[9].ok());
  CHECK(results[9].error.find("u9") != std::string::npos);
  CHECK_THROWS_AS(solve_exact(9, d, p, params), InfeasibleError);
}

TEST_CASE("an empty unit list solves nothing") {
  const Dataset d = line({0.0, 1.0}, {0, 1});
  const UnitPredictions p{{0, 0}, {0, 0}};
  const Dataset empty = d.subset({});
  CHECK(solve_all(empty, UnitPredictions{}, SolverParams{}, 4).empty());
}

TEST_CASE("scaling all weights together keeps the optimal group") {
  Rng rng(51);
  std::uniform_int_distribution<int> quarter(0, 8);
  int compared = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto inst = testing::random_instance(rng, 4 + trial % 10, 1 + trial % 3);
    SolverParams params;
    params.weights = {quarter(rng) / 4.0, quarter(rng) / 4.0, quarter(rng) / 4.0};
    for (double c : {0.5, 3.0, 10.0}) {
      SolverParams scaled = params;
      scaled.weights = {c * params.weights.gamma0, c * params.weights.gamma1, c * params.weights.beta};
      for (std::size_t i = 0; i < inst.data.n(); ++i) {
        std::optional<BoxSolution> a, b;
        try { a = solve_exact(i, inst.data, inst.predictions, params); } catch (const InfeasibleError&) {}
        try { b = solve_exact(i, inst.data, inst.predictions, scaled); } catch (const InfeasibleError&) {}
        REQUIRE(a.has_value() == b.has_value());
        if (!a) continue;
        CHECK(a->group == b->group);
        CHECK(b->objective == doctest::Approx(c * a->objective).epsilon(1e-12));
        ++compared;
      }
    }
  }
  CHECK(compared > 500);
}

TEST_CASE("threshold_coord at infinity changes nothing") {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_instance(rng, 4 + trial % 12, 1 + trial % 3);
    SolverParams plain;
    plain.weights.beta = 0.5;
    SolverParams filtered = plain;
    filtered.preprocess = Preprocess::threshold_coord(std::numeric_limits<double>::infinity());
    const auto a = solve_all(inst.data, inst.predictions, plain, 1);
    const auto b = solve_all(inst.data, inst.predictions, filtered, 1);
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].ok() == b[k].ok());
      if (!a[k].ok()) continue;
      CHECK(a[k].solution->box == b[k].solution->box);
      CHECK(a[k].solution->objective == b[k].solution->objective);
    }
  }
}

TEST_CASE("normalization divides gammas by the variance of absolute predictions") {
  const UnitPredictions p{{1.0, -2.0, 3.0, 0.0, 4.0}, {0.0, 1.0, 0.0, -1.0, 0.0}};
  // |f0| = 1,2,3,0,4: mean 2, squares 10, sample variance 10/4.
  // |f1| = 0,1,0,1,0: mean 0.4, squares 1.2, sample variance 0.3.
  SolverParams params;
  params.normalize = true;
  params.weights = {1.0, 3.0, 0.5};
  const auto w = effective_weights(params, p);
  CHECK(w.gamma0 == doctest::Approx(1.0 / 2.5).epsilon(1e-14));
  CHECK(w.gamma1 == doctest::Approx(3.0 / 0.3).epsilon(1e-14));
  CHECK(w.beta == 0.5);

  const Dataset d = line({0.0, 0.1, 0.2, 0.3, 0.4}, {1, 0, 1, 0, 0});
  SolverParams manual;
  manual.weights = w;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = solve_exact(i, d, p, params);
    const auto b = solve_exact(i, d, p, manual);
    CHECK(a.group == b.group);
    CHECK(a.objective == b.objective);
  }

  const UnitPredictions flat{{1, 1, 1, 1, 1}, {0, 1, 0, 1, 0}};
  CHECK_THROWS_AS(effective_weights(params, flat), ConfigError);
}

TEST_CASE("the enumeration oracle is deterministic and guarded") {
  const Dataset two = line({0.0, 1.0}, {1, 0});
  const UnitPredictions p{{0.0, 1.0}, {0.0, 0.5}};
  SolverParams params;
  const auto a = brute_force_oracle(0, two, p, params);
  const auto b = brute_force_oracle(0, two, p, params);
  CHECK(a.box == b.box);
  CHECK(a.group.members == std::vector<std::size_t>{0, 1});

  Rng rng(71);
  const auto big = testing::random_instance(rng, 26, 1, false);
  CHECK_THROWS_AS(brute_force_oracle(0, big.data, big.predictions, params), ConfigError);
  const auto wide = testing::random_instance(rng, 6, 4, false);
  CHECK_THROWS_AS(brute_force_oracle(0, wide.data, wide.predictions, params), ConfigError);
}

TEST_CASE("exact solver handles 200 random instances quickly") {
  Rng rng(81);
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testing::random_instance(rng, 15, 3);
    solve_all(inst.data, inst.predictions, SolverParams{}, 1);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed.count() < 60.0);
}
