#ifndef AHB_FUNCTIONS_HPP
#define AHB_FUNCTIONS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ahb {

// Confounding / heterogeneity function shapes used by the simulator.
enum class FunctionKind { kNone, kConst, kBox, kLinear, kQuad, kBinary, kMixed };

FunctionKind parse_function_kind(std::string_view name);
std::string to_string(FunctionKind kind);

// A function of a fixed subset of covariates.
//   None   0
//   Const  1
//   Box    sum_j 1{0.5 < x_j}
//   Linear sum_j x_j
//   Quad   sum_j x_j^2
//   Binary sum_j w_j            (one binary covariate in the standard setups)
//   Mixed  sum_j (x_j + w_j)    continuous_columns[j] paired with binary_columns[j]
struct CovariateFunction {
  FunctionKind kind = FunctionKind::kNone;
  std::vector<std::size_t> continuous_columns;
  std::vector<std::size_t> binary_columns;

  double operator()(std::span<const double> x) const;
};

// Ground-truth outcome surfaces: f0 = g, f1 = g + h.
struct TruthFunctions {
  CovariateFunction g;
  CovariateFunction h;
};

}  // namespace ahb

#endif  // AHB_FUNCTIONS_HPP
