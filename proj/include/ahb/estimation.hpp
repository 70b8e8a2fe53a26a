#ifndef AHB_ESTIMATION_HPP
#define AHB_ESTIMATION_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahb/boxes.hpp"
#include "ahb/data.hpp"
#include "ahb/solver_mip.hpp"

namespace ahb {

enum class Variant { kTauA, kTauB };

Variant parse_variant(const std::string& name);
std::string to_string(Variant variant);

// Arm means of observed outcomes inside a group; a side with no members of
// that arm is left empty.
struct Counterfactuals {
  std::optional<double> y0_hat;
  std::optional<double> y1_hat;
};

Counterfactuals estimate_counterfactuals(const MatchedGroup& group, const Dataset& test);

struct EffectEstimate {
  std::size_t unit = 0;
  std::string unit_id;
  std::optional<double> y0_hat;
  std::optional<double> y1_hat;
  double ite = 0.0;
  Variant variant = Variant::kTauA;
  std::size_t group_size = 0;
  std::size_t n_c = 0;
  std::size_t n_t = 0;
};

// tau_a = y1_hat - y0_hat; tau_b = Y_unit - y0_hat (treated units only).
// Throws ValidationError when the needed arm is absent from the group, when
// outcomes are missing, or for tau_b on a control unit.
EffectEstimate ite(std::size_t unit, const MatchedGroup& group, const Dataset& test,
                   Variant variant);

// Per-unit estimate or the reason it is missing.
struct UnitEstimate {
  std::size_t unit = 0;
  std::optional<EffectEstimate> estimate;
  std::string error;
};

// Estimates for every solved unit. Units whose solve failed, or whose group
// lacks the arm the variant needs, carry an error instead.
std::vector<UnitEstimate> estimate_all(const Dataset& test, const std::vector<UnitResult>& results,
                                       Variant variant);

struct AttResult {
  double att = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
};

// Mean ITE over treated units. Throws ValidationError when none is usable.
AttResult att(const std::vector<UnitEstimate>& estimates, const Dataset& test);
double att(std::span<const EffectEstimate> estimates);

struct CateResult {
  double cate = 0.0;
  std::size_t count = 0;
};

// Mean ITE over treated units whose covariate `column` equals `value`.
CateResult cate_by_value(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                         std::size_t column, double value);
// Same over the half-open bin [lo, hi).
CateResult cate_by_bin(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                       std::size_t column, double lo, double hi);

// max(|A & B| / |A|, |A & B| / |B|).
double mutual_membership_rate(const MatchedGroup& a, const MatchedGroup& b);

// unit_id, variant, ite, y0_hat, y1_hat, n_c, n_t, solver
void write_estimates_header(std::ostream& out);
void write_estimate_row(std::ostream& out, const EffectEstimate& e, const std::string& solver);

}  // namespace ahb

#endif  // AHB_ESTIMATION_HPP
