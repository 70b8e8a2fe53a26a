#include "ahb/match.hpp"

#include <algorithm>
#include <cctype>

#include "ahb/errors.hpp"

namespace ahb {

SolverKind parse_solver(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "mip") return SolverKind::kMip;
  if (lower == "fast") return SolverKind::kFast;
  throw ConfigError("unknown solver '" + name + "' (expected mip or fast)");
}

std::string to_string(SolverKind kind) { return kind == SolverKind::kMip ? "mip" : "fast"; }

FastParams fast_params(const MatchOptions& options) {
  FastParams fp;
  fp.c = options.c;
  fp.grid_points = options.grid_points;
  fp.m = options.params.m;
  fp.eps_abs = options.eps_abs;
  fp.weights = options.params.weights;
  fp.normalize = options.params.normalize;
  return fp;
}

std::vector<UnitResult> match_all(const Dataset& test, const OutcomeModel& model,
                                  const MatchOptions& options, int workers,
                                  const std::vector<std::size_t>& units,
                                  std::vector<std::vector<FastStep>>* traces) {
  if (options.solver == SolverKind::kFast) {
    return fast_all(test, model, fast_params(options), workers, units, traces);
  }
  if (traces) traces->clear();
  return solve_all(test, predict_units(model, test), options.params, workers, units);
}

}  // namespace ahb
