#ifndef AHB_SOLVER_MIP_HPP
#define AHB_SOLVER_MIP_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ahb/boxes.hpp"
#include "ahb/data.hpp"
#include "ahb/predictor.hpp"

namespace ahb {

// Weights of the three loss terms: treated-surface cost, control-surface
// cost, and the per-member reward.
struct LossWeights {
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  double beta = 1.0;
};

enum class PreprocessMode { kNone, kSort, kThresholdL, kThresholdCoord };

// Candidate reduction applied before the exact search.
struct Preprocess {
  PreprocessMode mode = PreprocessMode::kNone;
  std::size_t d = 0;  // kSort: kept per arm
  double epsilon = std::numeric_limits<double>::infinity();  // thresholds

  static Preprocess none() { return {}; }
  static Preprocess sort(std::size_t d) { return {PreprocessMode::kSort, d, 0.0}; }
  static Preprocess threshold_l(double eps) { return {PreprocessMode::kThresholdL, 0, eps}; }
  static Preprocess threshold_coord(double eps) {
    return {PreprocessMode::kThresholdCoord, 0, eps};
  }

  // "none", "sort:<d>", "threshold_l:<eps>", "threshold_coord:<eps>"
  // ("inf" accepted for eps).
  static Preprocess parse(const std::string& text);
  std::string to_string() const;
};

struct SolverParams {
  LossWeights weights;
  int m = 1;               // minimum number of control members
  bool normalize = false;  // divide gammas by prediction variance over the test units
  Preprocess preprocess;
  // Drop other units of the owner's arm from the candidate set (e.g. match
  // treated units to controls only).
  bool exclude_same_arm = false;
};

struct BoxSolution {
  HyperBox box;
  MatchedGroup group;
  double objective = 0.0;
  bool optimal = false;
  // (candidate row, weighted cost to the owner), ascending by row.
  std::vector<std::pair<std::size_t, double>> unit_costs;
};

// gamma1 |f1(x_i) - f1(x_k)| + gamma0 |f0(x_i) - f0(x_k)|
double unit_cost(std::size_t i, std::size_t k, const UnitPredictions& predictions,
                 const LossWeights& weights);

// Costs from unit i to every row.
std::vector<double> unit_costs(std::size_t i, const UnitPredictions& predictions,
                               const LossWeights& weights);

// sum_{k in group} (costs[k] - beta), correctly rounded so the value does not
// depend on the order of the members.
double objective(const MatchedGroup& group, const std::vector<double>& costs, double beta);

// Weights actually used by the solvers: normalized when params.normalize.
LossWeights effective_weights(const SolverParams& params, const UnitPredictions& predictions);

// Candidate rows (sorted, always containing i) surviving the preprocessing
// filter. Throws InfeasibleError when fewer than m controls survive.
std::vector<std::size_t> preprocess(std::size_t i, const Dataset& test,
                                    const UnitPredictions& predictions,
                                    const SolverParams& params);

// Globally optimal box for unit i over boxes whose edges sit on candidate
// coordinates. Ties: smaller volume of the tight box, then lexicographically
// smallest (lower..., upper...). Throws InfeasibleError.
BoxSolution solve_exact(std::size_t i, const Dataset& test, const UnitPredictions& predictions,
                        const SolverParams& params);
BoxSolution solve_exact(std::size_t i, const Dataset& test, const OutcomeModel& model,
                        const SolverParams& params);

// Exhaustive enumeration with the same tie rule. Refuses (ConfigError)
// instances with more than 25 candidates or more than 3 covariates.
BoxSolution brute_force_oracle(std::size_t i, const Dataset& test,
                               const UnitPredictions& predictions, const SolverParams& params);

inline constexpr std::size_t kOracleMaxCandidates = 25;
inline constexpr std::size_t kOracleMaxDims = 3;

// Per-unit outcome of a batch solve.
struct UnitResult {
  std::size_t unit = 0;
  std::optional<BoxSolution> solution;
  std::string error;  // set when solution is empty

  bool ok() const { return solution.has_value(); }
};

// Solves every listed unit (all rows when `units` is empty) with `workers`
// threads. Results are ordered like `units` and do not depend on `workers`.
std::vector<UnitResult> solve_all(const Dataset& test, const UnitPredictions& predictions,
                                  const SolverParams& params, int workers,
                                  const std::vector<std::size_t>& units = {});

}  // namespace ahb

#endif  // AHB_SOLVER_MIP_HPP
