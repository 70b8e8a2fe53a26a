#include "ahb/solver_fast.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "ahb/errors.hpp"
#include "ahb/parallel.hpp"

namespace ahb {

std::optional<ExpansionTarget> nearest_expansion_target(const HyperBox& box, std::size_t j,
                                                        const Dataset& test) {
  std::optional<ExpansionTarget> down, up;
  double gap_down = 0.0, gap_up = 0.0;
  for (std::size_t k = 0; k < test.n(); ++k) {
    const double v = test.at(k, j);
    if (v < box.lower[j]) {
      const double gap = box.lower[j] - v;
      if (!down || gap < gap_down) {
        down = ExpansionTarget{k, Direction::kDown, v};
        gap_down = gap;
      }
    } else if (v > box.upper[j]) {
      const double gap = v - box.upper[j];
      if (!up || gap < gap_up) {
        up = ExpansionTarget{k, Direction::kUp, v};
        gap_up = gap;
      }
    }
  }
  if (down && (!up || gap_down <= gap_up)) return down;
  return up;
}

namespace {

std::vector<double> axis_values(double lo, double hi, int points, bool binary) {
  if (hi <= lo) return {lo};
  if (binary) return {lo, hi};
  std::vector<double> values(static_cast<std::size_t>(points));
  const double step = (hi - lo) / (points - 1);
  for (int g = 0; g < points; ++g) values[static_cast<std::size_t>(g)] = lo + step * g;
  values.back() = hi;
  return values;
}

double population_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

}  // namespace

double grid_variation(const HyperBox& old_box, const HyperBox& proposed,
                      const OutcomeModel& model, int grid_points,
                      const std::vector<ColumnMeta>& columns) {
  const std::size_t p = proposed.dims();
  if (old_box.dims() != p || columns.size() != p) {
    throw ValidationError("grid_variation: dimension mismatch");
  }
  if (grid_points < 2) throw ConfigError("grid needs at least 2 points per axis");
  std::vector<std::vector<double>> axes(p);
  bool grown = false;
  for (std::size_t j = 0; j < p; ++j) {
    const bool binary = columns[j].kind == ColumnKind::kBinary;
    double lo = proposed.lower[j];
    double hi = proposed.upper[j];
    if (proposed.lower[j] < old_box.lower[j]) {
      hi = old_box.lower[j];
      grown = true;
    } else if (proposed.upper[j] > old_box.upper[j]) {
      lo = old_box.upper[j];
      grown = true;
    }
    axes[j] = axis_values(lo, hi, grid_points, binary);
  }
  if (!grown) return 0.0;

  std::vector<double> f0, f1;
  std::vector<std::size_t> digit(p, 0);
  std::vector<double> point(p);
  for (;;) {
    for (std::size_t j = 0; j < p; ++j) point[j] = axes[j][digit[j]];
    f0.push_back(model.predict(point, Arm::kControl));
    f1.push_back(model.predict(point, Arm::kTreated));
    std::size_t d = 0;
    while (d < p && ++digit[d] == axes[d].size()) digit[d++] = 0;
    if (d == p) break;
  }
  return population_variance(f0) + population_variance(f1);
}

BoxSolution fast_box(std::size_t i, const Dataset& test, const OutcomeModel& model,
                     const FastParams& params, std::vector<FastStep>* trace) {
  return fast_box(i, test, model, predict_units(model, test), params, trace);
}

namespace {

void validate(const FastParams& params) {
  if (!(params.c >= 1.0)) throw ConfigError("fast solver needs c >= 1");
  if (params.grid_points < 2) throw ConfigError("fast solver needs at least 2 grid points");
  if (params.m < 1) throw ConfigError("m must be at least 1");
  if (params.eps_abs && !(*params.eps_abs >= 0.0)) throw ConfigError("eps_abs must be >= 0");
}

double default_eps(const UnitPredictions& predictions) {
  double scale = 0.0;
  for (double v : predictions.f0) scale = std::max(scale, std::abs(v));
  for (double v : predictions.f1) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  return 1e-12 * scale * scale;
}

BoxSolution fast_box_with(std::size_t i, const Dataset& test, const OutcomeModel& model,
                          const UnitPredictions& predictions, const FastParams& params,
                          const LossWeights& weights, double eps, std::vector<FastStep>* trace) {
  if (!model.supports_points()) {
    throw UnavailableError("the fast solver needs a model that predicts at arbitrary points (" +
                           model.name() + " does not)");
  }
  if (i >= test.n()) throw ConfigError("unit index out of range");
  const std::size_t p = test.p();
  const auto m = static_cast<std::size_t>(params.m);
  const Arm other = opposite(test.arm(i));

  HyperBox box = point_box(test, i);
  MatchedGroup group = mmg(box, test);
  double previous = DBL_MAX;
  for (std::size_t s = 1;; ++s) {
    const bool satisfied = group.n_control >= m && group.count(other) >= 1;
    std::optional<std::size_t> best_axis;
    double best_v = 0.0;
    HyperBox best_box;
    Direction best_dir = Direction::kDown;
    for (std::size_t j = 0; j < p; ++j) {
      const auto target = nearest_expansion_target(box, j, test);
      if (!target) continue;
      HyperBox proposed = box;
      if (target->direction == Direction::kDown) {
        proposed.lower[j] = target->value;
      } else {
        proposed.upper[j] = target->value;
      }
      const double v = grid_variation(box, proposed, model, params.grid_points, test.columns());
      if (!best_axis || v < best_v) {
        best_axis = j;
        best_v = v;
        best_box = std::move(proposed);
        best_dir = target->direction;
      }
    }
    if (!best_axis) {
      if (satisfied) break;
      throw InfeasibleError("unit '" + test.unit_id(i) +
                            "': box covers every unit without meeting the control requirement");
    }
    if (satisfied && best_v > params.c * previous + eps) break;
    box = std::move(best_box);
    group = mmg(box, test);
    previous = best_v;
    if (trace) trace->push_back(FastStep{s, *best_axis, best_dir, best_v, box});
  }

  BoxSolution solution;
  solution.box = std::move(box);
  solution.group = std::move(group);
  const auto costs = unit_costs(i, predictions, weights);
  solution.objective = objective(solution.group, costs, weights.beta);
  solution.optimal = false;
  for (std::size_t k = 0; k < test.n(); ++k) solution.unit_costs.emplace_back(k, costs[k]);
  return solution;
}

LossWeights weights_for(const FastParams& params, const UnitPredictions& predictions) {
  SolverParams sp;
  sp.weights = params.weights;
  sp.normalize = params.normalize;
  return effective_weights(sp, predictions);
}

}  // namespace

BoxSolution fast_box(std::size_t i, const Dataset& test, const OutcomeModel& model,
                     const UnitPredictions& predictions, const FastParams& params,
                     std::vector<FastStep>* trace) {
  validate(params);
  const double eps = params.eps_abs ? *params.eps_abs : default_eps(predictions);
  return fast_box_with(i, test, model, predictions, params, weights_for(params, predictions), eps,
                       trace);
}

std::vector<UnitResult> fast_all(const Dataset& test, const OutcomeModel& model,
                                 const FastParams& params, int workers,
                                 const std::vector<std::size_t>& units,
                                 std::vector<std::vector<FastStep>>* traces) {
  validate(params);
  std::vector<std::size_t> order = units;
  if (order.empty()) {
    order.resize(test.n());
    std::iota(order.begin(), order.end(), 0);
  }
  std::vector<UnitResult> results(order.size());
  if (traces) traces->assign(order.size(), {});
  if (order.empty()) return results;
  if (!model.supports_points()) {
    throw UnavailableError("the fast solver needs a model that predicts at arbitrary points (" +
                           model.name() + " does not)");
  }
  const UnitPredictions predictions = predict_units(model, test);
  const LossWeights weights = weights_for(params, predictions);
  const double eps = params.eps_abs ? *params.eps_abs : default_eps(predictions);
  parallel_for(order.size(), workers, [&](std::size_t idx) {
    UnitResult& r = results[idx];
    r.unit = order[idx];
    try {
      r.solution = fast_box_with(r.unit, test, model, predictions, params, weights, eps,
                                 traces ? &(*traces)[idx] : nullptr);
    } catch (const InfeasibleError& e) {
      r.error = e.what();
    }
  });
  return results;
}

}  // namespace ahb
