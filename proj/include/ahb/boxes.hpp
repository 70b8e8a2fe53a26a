#ifndef AHB_BOXES_HPP
#define AHB_BOXES_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/predictor.hpp"

namespace ahb {

// Closed axis-aligned box [lower_1, upper_1] x ... x [lower_p, upper_p]
// built for the unit at row `owner`.
struct HyperBox {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t owner = 0;

  std::size_t dims() const { return lower.size(); }
  // Product of side lengths, accumulated in covariate order.
  double volume() const;

  bool operator==(const HyperBox&) const = default;
};

// Degenerate box sitting exactly on the owner's covariates.
HyperBox point_box(const Dataset& data, std::size_t owner);

// Closed-interval membership. Throws ValidationError on dimension mismatch.
bool contains(const HyperBox& box, std::span<const double> x);

// Units that fall in a box. `members` is sorted ascending.
struct MatchedGroup {
  std::size_t owner = 0;
  std::vector<std::size_t> members;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;

  std::size_t size() const { return members.size(); }
  bool contains(std::size_t k) const;
  std::size_t count(Arm arm) const { return arm == Arm::kTreated ? n_treated : n_control; }

  bool operator==(const MatchedGroup&) const = default;
};

// Builds a group from sorted member rows, filling the arm counts.
MatchedGroup make_group(std::size_t owner, std::vector<std::size_t> members, const Dataset& data);

// All rows of `data` inside the box.
MatchedGroup mmg(const HyperBox& box, const Dataset& data);

// Rows from `candidates` (sorted ascending) inside the box.
MatchedGroup mmg(const HyperBox& box, const Dataset& data,
                 std::span<const std::size_t> candidates);

// Smallest box containing every member (and the owner).
HyperBox tight_box(const MatchedGroup& group, const Dataset& data);

// |f0(x_i) - mean_k f0(x_k)| + |f1(x_i) - mean_k f1(x_k)| over the group.
// Throws ValidationError for an empty group.
double err_diagnostic(const MatchedGroup& group, const UnitPredictions& predictions);
double err_diagnostic(const HyperBox& box, const OutcomeModel& model, const Dataset& data);

// Population variance of member predictions under f0 plus the same under f1.
double var_diagnostic(const MatchedGroup& group, const UnitPredictions& predictions);
double var_diagnostic(const HyperBox& box, const OutcomeModel& model, const Dataset& data);

// Triangle-inequality surrogate for the error term:
// (1/n) sum_k |f0(x_i) - f0(x_k)| + |f1(x_i) - f1(x_k)|.
double err_upper_bound(const MatchedGroup& group, const UnitPredictions& predictions);

// Box export: one row (owner_id, covariate_name, lower, upper) per covariate.
void write_box_rows(std::ostream& out, const HyperBox& box, const Dataset& data);
void write_box_header(std::ostream& out);

}  // namespace ahb

#endif  // AHB_BOXES_HPP
