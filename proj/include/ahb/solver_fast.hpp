#ifndef AHB_SOLVER_FAST_HPP
#define AHB_SOLVER_FAST_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "ahb/boxes.hpp"
#include "ahb/data.hpp"
#include "ahb/predictor.hpp"
#include "ahb/solver_mip.hpp"

namespace ahb {

struct FastParams {
  double c = 2.0;       // stopping multiplier, >= 1
  int grid_points = 5;  // per axis, >= 2
  int m = 1;            // minimum control members
  // Slack added to the stopping threshold; defaults to 1e-12 * scale^2 where
  // scale is the largest absolute unit prediction.
  std::optional<double> eps_abs;
  // Only used to fill BoxSolution::objective.
  LossWeights weights;
  bool normalize = false;
};

enum class Direction { kDown, kUp };

struct ExpansionTarget {
  std::size_t unit = 0;
  Direction direction = Direction::kDown;
  double value = 0.0;  // new bound along the axis
};

// Closest unit strictly outside [lower_j, upper_j] along covariate j. Ties go
// to the downward side, then to the lowest row.
std::optional<ExpansionTarget> nearest_expansion_target(const HyperBox& box, std::size_t j,
                                                        const Dataset& test);

// Outcome variation over the slab added by `proposed`. The grown axis spans
// only the new interval; every other axis spans its range in `proposed`. Each
// axis gets `grid_points` evenly spaced values (one when its width is zero,
// the two endpoints for binary columns). Returns the population variance of
// f0 plus that of f1 over the grid.
double grid_variation(const HyperBox& old_box, const HyperBox& proposed,
                      const OutcomeModel& model, int grid_points,
                      const std::vector<ColumnMeta>& columns);

struct FastStep {
  std::size_t step = 0;
  std::size_t axis = 0;
  Direction direction = Direction::kDown;
  double variation = 0.0;
  HyperBox box;  // after the step
};

// Greedy expansion from the point box at unit i. Throws InfeasibleError when
// every axis is exhausted before the group holds m controls and a unit of
// the opposite arm, and UnavailableError for models without point
// predictions.
BoxSolution fast_box(std::size_t i, const Dataset& test, const OutcomeModel& model,
                     const FastParams& params, std::vector<FastStep>* trace = nullptr);

// Variant reusing predictions at the test units (for the objective and the
// default eps_abs).
BoxSolution fast_box(std::size_t i, const Dataset& test, const OutcomeModel& model,
                     const UnitPredictions& predictions, const FastParams& params,
                     std::vector<FastStep>* trace = nullptr);

std::vector<UnitResult> fast_all(const Dataset& test, const OutcomeModel& model,
                                 const FastParams& params, int workers,
                                 const std::vector<std::size_t>& units = {},
                                 std::vector<std::vector<FastStep>>* traces = nullptr);

}  // namespace ahb

#endif  // AHB_SOLVER_FAST_HPP
