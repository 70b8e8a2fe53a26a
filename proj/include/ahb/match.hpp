#ifndef AHB_MATCH_HPP
#define AHB_MATCH_HPP

#include <optional>
#include <string>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/predictor.hpp"
#include "ahb/solver_fast.hpp"
#include "ahb/solver_mip.hpp"

namespace ahb {

enum class SolverKind { kMip, kFast };

SolverKind parse_solver(const std::string& name);
std::string to_string(SolverKind kind);

// Everything needed to build boxes for a set of units with either solver.
struct MatchOptions {
  SolverKind solver = SolverKind::kMip;
  SolverParams params;  // shared loss weights, m, normalization; preprocessing is MIP only
  double c = 2.0;
  int grid_points = 5;
  std::optional<double> eps_abs;
};

FastParams fast_params(const MatchOptions& options);

// Boxes for the listed units (all units when empty), in that order.
std::vector<UnitResult> match_all(const Dataset& test, const OutcomeModel& model,
                                  const MatchOptions& options, int workers,
                                  const std::vector<std::size_t>& units = {},
                                  std::vector<std::vector<FastStep>>* traces = nullptr);

}  // namespace ahb

#endif  // AHB_MATCH_HPP
