#include "doctest.h"

#include <sstream>

#include "ahb/boxes.hpp"
#include "ahb/errors.hpp"
#include "generators.hpp"

using namespace ahb;

namespace {

HyperBox box(std::vector<double> lo, std::vector<double> hi, std::size_t owner = 0) {
  return HyperBox{std::move(lo), std::move(hi), owner};
}

UnitPredictions preds(std::vector<double> f0, std::vector<double> f1) {
  return UnitPredictions{std::move(f0), std::move(f1)};
}

std::vector<std::size_t> brute_members(const HyperBox& b, const Dataset& d) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < d.n(); ++k) {
    bool in = true;
    for (std::size_t j = 0; j < d.p(); ++j) {
      in = in && b.lower[j] <= d.at(k, j) && d.at(k, j) <= b.upper[j];
    }
    if (in) out.push_back(k);
  }
  return out;
}

HyperBox random_box(Rng& rng, const Dataset& d, std::size_t owner) {
  std::uniform_int_distribution<int> step(0, 3);
  HyperBox b = point_box(d, owner);
  for (std::size_t j = 0; j < d.p(); ++j) {
    b.lower[j] -= step(rng) * 0.25;
    b.upper[j] += step(rng) * 0.25;
  }
  return b;
}

}  // namespace

TEST_CASE("contains uses closed intervals") {
  const auto unit = box({0, 0}, {1, 1});
  CHECK(contains(unit, std::vector<double>{0, 1}));
  CHECK_FALSE(contains(unit, std::vector<double>{1.0001, 0.5}));
  const std::vector<double> xi{0.3, 0.7};
  CHECK(contains(box(xi, xi), xi));
  CHECK_THROWS_AS(contains(unit, std::vector<double>{0.5}), ValidationError);
}

TEST_CASE("mmg examples") {
  const Dataset line = Dataset::from_rows({{0.0}, {0.3}, {0.6}, {1.0}}, {0, 1, 0, 1});
  const auto g = mmg(box({0.25}, {0.65}, 1), line);
  CHECK(g.members == std::vector<std::size_t>{1, 2});
  CHECK(g.n_treated == 1);
  CHECK(g.n_control == 1);

  const auto single = mmg(point_box(line, 2), line);
  CHECK(single.members == std::vector<std::size_t>{2});
  CHECK(single.size() == 1);

  const auto all = mmg(box({0.0}, {1.0}, 0), line);
  CHECK(all.size() == 4);
  CHECK(all.n_treated + all.n_control == 4);

  CHECK_THROWS_AS(mmg(box({0, 0}, {1, 1}), line), ValidationError);
}

TEST_CASE("mmg over a candidate subset") {
  const Dataset line = Dataset::from_rows({{0.0}, {0.3}, {0.6}, {1.0}}, {0, 1, 0, 1});
  const std::vector<std::size_t> candidates{0, 2, 3};
  const auto g = mmg(box({0.0}, {1.0}, 0), line, candidates);
  CHECK(g.members == candidates);
  CHECK(g.n_treated == 1);
}

TEST_CASE("err diagnostic examples") {
  const Dataset d = Dataset::from_rows({{0.0}, {1.0}, {2.0}}, {0, 0, 1});
  const auto p = preds({1, 2, 3}, {0, 0, 0});
  const auto g = make_group(0, {0, 1, 2}, d);
  CHECK(err_diagnostic(g, p) == 1.0);
  CHECK(err_diagnostic(make_group(0, {0}, d), p) == 0.0);

  const testing::FunctionModel constant([](std::span<const double>, Arm) { return 4.0; });
  CHECK(err_diagnostic(box({0.0}, {2.0}, 1), constant, d) == 0.0);
  CHECK_THROWS_AS(err_diagnostic(MatchedGroup{}, p), ValidationError);
}

TEST_CASE("var diagnostic examples") {
  const Dataset d = Dataset::from_rows({{0.0}, {1.0}}, {0, 1});
  const auto p = preds({0, 2}, {5, 5});
  CHECK(var_diagnostic(make_group(0, {0, 1}, d), p) == 1.0);
  CHECK(var_diagnostic(make_group(1, {1}, d), p) == 0.0);

  const testing::FunctionModel constant([](std::span<const double>, Arm) { return -2.0; });
  CHECK(var_diagnostic(box({0.0}, {1.0}, 0), constant, d) == 0.0);
  CHECK_THROWS_AS(var_diagnostic(MatchedGroup{}, p), ValidationError);
}

TEST_CASE("tight box and volume") {
  const Dataset d = Dataset::from_rows({{0.0, 1.0}, {0.5, 3.0}, {2.0, 2.0}}, {0, 1, 0});
  const auto g = make_group(0, {0, 1}, d);
  const auto t = tight_box(g, d);
  CHECK(t.lower == std::vector<double>{0.0, 1.0});
  CHECK(t.upper == std::vector<double>{0.5, 3.0});
  CHECK(t.volume() == 1.0);
  CHECK(mmg(t, d).members == g.members);
}

TEST_CASE("box export writes one row per covariate") {
  const Dataset d = Dataset::from_rows({{0.0, 1.0}, {0.5, 3.0}}, {0, 1});
  std::ostringstream out;
  write_box_header(out);
  write_box_rows(out, box({0.0, 1.0}, {0.5, 3.0}, 1), d);
  CHECK(out.str() == "owner_id,covariate_name,lower,upper\nu1,x1,0,0.5\nu1,x2,1,3\n");
}

TEST_CASE("mmg matches a brute-force scan on random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testing::random_instance(rng, 3 + trial % 12, 1 + trial % 4);
    const std::size_t owner = rng() % inst.data.n();
    const auto b = random_box(rng, inst.data, owner);
    const auto g = mmg(b, inst.data);
    CHECK(g.members == brute_members(b, inst.data));
    CHECK(g.contains(owner));
    CHECK(g.n_treated + g.n_control == g.size());
  }
}

TEST_CASE("enlarging a box never removes members") {
  Rng rng(202);
  std::uniform_int_distribution<int> grow(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testing::random_instance(rng, 4 + trial % 10, 1 + trial % 3);
    const auto b = random_box(rng, inst.data, 0);
    HyperBox bigger = b;
    for (std::size_t j = 0; j < b.dims(); ++j) {
      bigger.lower[j] -= grow(rng) * 0.25;
      bigger.upper[j] += grow(rng) * 0.25;
    }
    const auto small = mmg(b, inst.data);
    const auto large = mmg(bigger, inst.data);
    for (std::size_t k : small.members) CHECK(large.contains(k));
  }
}

TEST_CASE("err diagnostic is bounded by its triangle surrogate") {
  Rng rng(303);
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = testing::random_instance(rng, 3 + trial % 12, 1 + trial % 3);
    const std::size_t owner = rng() % inst.data.n();
    const auto g = mmg(random_box(rng, inst.data, owner), inst.data);
    CHECK(err_diagnostic(g, inst.predictions) <= err_upper_bound(g, inst.predictions) + 1e-12);
    CHECK(var_diagnostic(g, inst.predictions) >= 0.0);
  }
}
