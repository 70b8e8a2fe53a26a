#include "ahb/functions.hpp"

#include <algorithm>
#include <cctype>

#include "ahb/errors.hpp"

namespace ahb {

FunctionKind parse_function_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "none") return FunctionKind::kNone;
  if (lower == "const") return FunctionKind::kConst;
  if (lower == "box") return FunctionKind::kBox;
  if (lower == "linear") return FunctionKind::kLinear;
  if (lower == "quad") return FunctionKind::kQuad;
  if (lower == "binary") return FunctionKind::kBinary;
  if (lower == "mixed") return FunctionKind::kMixed;
  throw ConfigError("unknown function kind '" + std::string(name) + "'");
}

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::kNone: return "None";
    case FunctionKind::kConst: return "Const";
    case FunctionKind::kBox: return "Box";
    case FunctionKind::kLinear: return "Linear";
    case FunctionKind::kQuad: return "Quad";
    case FunctionKind::kBinary: return "Binary";
    case FunctionKind::kMixed: return "Mixed";
  }
  return "None";
}

double CovariateFunction::operator()(std::span<const double> x) const {
  double sum = 0.0;
  switch (kind) {
    case FunctionKind::kNone:
      return 0.0;
    case FunctionKind::kConst:
      return 1.0;
    case FunctionKind::kBox:
      for (auto j : continuous_columns) sum += x[j] > 0.5 ? 1.0 : 0.0;
      return sum;
    case FunctionKind::kLinear:
      for (auto j : continuous_columns) sum += x[j];
      return sum;
    case FunctionKind::kQuad:
      for (auto j : continuous_columns) sum += x[j] * x[j];
      return sum;
    case FunctionKind::kBinary:
      for (auto j : binary_columns) sum += x[j];
      return sum;
    case FunctionKind::kMixed:
      for (std::size_t k = 0; k < continuous_columns.size(); ++k) {
        sum += x[continuous_columns[k]] + x[binary_columns[k]];
      }
      return sum;
  }
  return 0.0;
}

}  // namespace ahb
