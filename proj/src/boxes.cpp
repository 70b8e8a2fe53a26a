#include "ahb/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"

namespace ahb {

double HyperBox::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lower.size(); ++j) v *= upper[j] - lower[j];
  return v;
}

HyperBox point_box(const Dataset& data, std::size_t owner) {
  auto row = data.row(owner);
  return HyperBox{{row.begin(), row.end()}, {row.begin(), row.end()}, owner};
}

bool contains(const HyperBox& box, std::span<const double> x) {
  if (x.size() != box.dims()) {
    throw ValidationError("box has " + std::to_string(box.dims()) + " dimensions, point has " +
                          std::to_string(x.size()));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < box.lower[j] || x[j] > box.upper[j]) return false;
  }
  return true;
}

bool MatchedGroup::contains(std::size_t k) const {
  return std::binary_search(members.begin(), members.end(), k);
}

MatchedGroup make_group(std::size_t owner, std::vector<std::size_t> members, const Dataset& data) {
  MatchedGroup g;
  g.owner = owner;
  g.members = std::move(members);
  for (auto k : g.members) {
    if (data.treated(k)) {
      ++g.n_treated;
    } else {
      ++g.n_control;
    }
  }
  return g;
}

MatchedGroup mmg(const HyperBox& box, const Dataset& data) {
  if (box.dims() != data.p()) throw ValidationError("box dimension does not match dataset");
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < data.n(); ++k) {
    if (contains(box, data.row(k))) members.push_back(k);
  }
  return make_group(box.owner, std::move(members), data);
}

MatchedGroup mmg(const HyperBox& box, const Dataset& data,
                 std::span<const std::size_t> candidates) {
  if (box.dims() != data.p()) throw ValidationError("box dimension does not match dataset");
  std::vector<std::size_t> members;
  for (auto k : candidates) {
    if (contains(box, data.row(k))) members.push_back(k);
  }
  return make_group(box.owner, std::move(members), data);
}

HyperBox tight_box(const MatchedGroup& group, const Dataset& data) {
  HyperBox box = point_box(data, group.owner);
  for (auto k : group.members) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      box.lower[j] = std::min(box.lower[j], data.at(k, j));
      box.upper[j] = std::max(box.upper[j], data.at(k, j));
    }
  }
  return box;
}

namespace {

void require_members(const MatchedGroup& group) {
  if (group.members.empty()) throw ValidationError("matched group is empty");
}

double member_mean(const MatchedGroup& group, const std::vector<double>& values) {
  double sum = 0.0;
  for (auto k : group.members) sum += values[k];
  return sum / static_cast<double>(group.size());
}

double member_variance(const MatchedGroup& group, const std::vector<double>& values) {
  const double mean = member_mean(group, values);
  double ss = 0.0;
  for (auto k : group.members) ss += (values[k] - mean) * (values[k] - mean);
  return ss / static_cast<double>(group.size());
}

}  // namespace

double err_diagnostic(const MatchedGroup& group, const UnitPredictions& predictions) {
  require_members(group);
  const auto i = group.owner;
  return std::abs(predictions.f0[i] - member_mean(group, predictions.f0)) +
         std::abs(predictions.f1[i] - member_mean(group, predictions.f1));
}

double err_diagnostic(const HyperBox& box, const OutcomeModel& model, const Dataset& data) {
  return err_diagnostic(mmg(box, data), predict_units(model, data));
}

double var_diagnostic(const MatchedGroup& group, const UnitPredictions& predictions) {
  require_members(group);
  return member_variance(group, predictions.f0) + member_variance(group, predictions.f1);
}

double var_diagnostic(const HyperBox& box, const OutcomeModel& model, const Dataset& data) {
  return var_diagnostic(mmg(box, data), predict_units(model, data));
}

double err_upper_bound(const MatchedGroup& group, const UnitPredictions& predictions) {
  require_members(group);
  const auto i = group.owner;
  double sum = 0.0;
  for (auto k : group.members) {
    sum += std::abs(predictions.f0[i] - predictions.f0[k]) +
           std::abs(predictions.f1[i] - predictions.f1[k]);
  }
  return sum / static_cast<double>(group.size());
}

void write_box_header(std::ostream& out) {
  csv::write_row(out, {"owner_id", "covariate_name", "lower", "upper"});
}

void write_box_rows(std::ostream& out, const HyperBox& box, const Dataset& data) {
  for (std::size_t j = 0; j < box.dims(); ++j) {
    csv::write_row(out, {data.unit_id(box.owner), data.columns()[j].name,
                         csv::format_number(box.lower[j]), csv::format_number(box.upper[j])});
  }
}

}  // namespace ahb
