#ifndef AHB_SIMULATION_HPP
#define AHB_SIMULATION_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/estimation.hpp"
#include "ahb/functions.hpp"
#include "ahb/predictor.hpp"

namespace ahb {

struct DgpConfig {
  int p_c = 2;  // continuous covariates, drawn U(0, 1)
  int p_d = 0;  // binary covariates, drawn Bernoulli(0.5)
  int n_confounding = 2;
  int n_treatment = 0;
  int n_irrelevant = 0;
  // With n_treatment == 0 a non-constant h reuses the confounding covariates.
  FunctionKind g_kind = FunctionKind::kLinear;
  FunctionKind h_kind = FunctionKind::kConst;
  // Propensity coefficients, one per covariate in column order. Default: 1 on
  // confounding covariates, 0 elsewhere.
  std::optional<std::vector<double>> gamma;
  double sigma = 1.0;
  std::size_t n = 600;
  std::uint64_t seed = 0;
};

// Column layout and functions implied by a config. Continuous columns come
// first (x1..), then binary ones (w1..).
struct DgpLayout {
  std::vector<ColumnMeta> columns;
  std::vector<std::size_t> confounding;
  std::vector<std::size_t> treatment;
  std::vector<std::size_t> irrelevant;
  TruthFunctions truth;
  std::vector<double> gamma;
};

// Throws ConfigError when the role split or function kinds do not fit the
// covariate counts.
DgpLayout dgp_layout(const DgpConfig& config);

struct SimTruth {
  TruthFunctions functions;
  std::vector<double> g;
  std::vector<double> h;  // true ITE
  std::vector<double> propensity;
  std::vector<double> y0;
  std::vector<double> y1;
  double sigma = 0.0;

  // Rows of `truth` for the units of `part`, matched by unit id against `full`.
  SimTruth for_units(const Dataset& full, const Dataset& part) const;
};

struct Simulated {
  Dataset data;
  SimTruth truth;
};

// Unit ids are "u1".."un". One random stream draws every covariate (row by
// row), then every treatment, then every noise term.
Simulated generate(const DgpConfig& config);

struct MaeResult {
  double value = 0.0;  // MAE / ATT, or raw MAE when att_is_zero
  double mae = 0.0;
  double true_att = 0.0;
  bool att_is_zero = false;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
};

// Mean absolute ITE error over treated units with estimates, divided by the
// true ATT over those same units. `truth` is aligned with `test`.
MaeResult evaluate_mae_att(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                           const SimTruth& truth);

enum class BaselineKind { kNaive, kMahalanobis, kPrognostic, kBestCf };

struct Baseline {
  BaselineKind kind = BaselineKind::kNaive;
  int k = 1;
};

// "naive", "mahal_nn:<k>", "prognostic_nn:<k>", "best_cf:<k>" (k defaults to 1).
Baseline parse_baseline(const std::string& name);
std::string to_string(const Baseline& baseline);

// tau_b estimates for every treated unit of `test`, matching with
// replacement against the controls of `test`. Prognostic matching needs
// `model`; best_cf needs `truth` aligned with `test`.
std::vector<UnitEstimate> baseline_estimates(const Baseline& baseline, const Dataset& test,
                                             const OutcomeModel* model, const SimTruth* truth);

}  // namespace ahb

#endif  // AHB_SIMULATION_HPP
