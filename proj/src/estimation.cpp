#include "ahb/estimation.hpp"

#include <algorithm>
#include <iterator>
#include <ostream>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"

namespace ahb {

Variant parse_variant(const std::string& name) {
  if (name == "tau_a") return Variant::kTauA;
  if (name == "tau_b") return Variant::kTauB;
  throw ConfigError("unknown estimator variant '" + name + "' (expected tau_a or tau_b)");
}

std::string to_string(Variant variant) { return variant == Variant::kTauA ? "tau_a" : "tau_b"; }

Counterfactuals estimate_counterfactuals(const MatchedGroup& group, const Dataset& test) {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (auto k : group.members) {
    const int a = static_cast<int>(test.arm(k));
    sum[a] += test.outcome(k);
    ++count[a];
  }
  Counterfactuals out;
  if (count[0] > 0) out.y0_hat = sum[0] / static_cast<double>(count[0]);
  if (count[1] > 0) out.y1_hat = sum[1] / static_cast<double>(count[1]);
  return out;
}

EffectEstimate ite(std::size_t unit, const MatchedGroup& group, const Dataset& test,
                   Variant variant) {
  if (!test.has_outcomes()) throw ValidationError("effect estimation needs observed outcomes");
  const auto cf = estimate_counterfactuals(group, test);
  EffectEstimate e;
  e.unit = unit;
  e.unit_id = test.unit_id(unit);
  e.y0_hat = cf.y0_hat;
  e.y1_hat = cf.y1_hat;
  e.variant = variant;
  e.group_size = group.size();
  e.n_c = group.n_control;
  e.n_t = group.n_treated;
  if (!cf.y0_hat) {
    throw ValidationError("unit '" + e.unit_id + "': matched group has no control units");
  }
  if (variant == Variant::kTauB) {
    if (!test.treated(unit)) {
      throw ValidationError("unit '" + e.unit_id + "': tau_b is only defined for treated units");
    }
    e.ite = test.outcome(unit) - *cf.y0_hat;
  } else {
    if (!cf.y1_hat) {
      throw ValidationError("unit '" + e.unit_id + "': matched group has no treated units");
    }
    e.ite = *cf.y1_hat - *cf.y0_hat;
  }
  return e;
}

std::vector<UnitEstimate> estimate_all(const Dataset& test, const std::vector<UnitResult>& results,
                                       Variant variant) {
  std::vector<UnitEstimate> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    UnitEstimate u;
    u.unit = r.unit;
    if (!r.ok()) {
      u.error = r.error;
    } else {
      try {
        u.estimate = ite(r.unit, r.solution->group, test, variant);
      } catch (const ValidationError& e) {
        u.error = e.what();
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

AttResult att(const std::vector<UnitEstimate>& estimates, const Dataset& test) {
  AttResult r;
  double sum = 0.0;
  for (const auto& u : estimates) {
    if (!test.treated(u.unit)) continue;
    if (u.estimate) {
      sum += u.estimate->ite;
      ++r.n_used;
    } else {
      ++r.n_excluded;
    }
  }
  if (r.n_used == 0) throw ValidationError("no treated unit has an effect estimate");
  r.att = sum / static_cast<double>(r.n_used);
  return r;
}

double att(std::span<const EffectEstimate> estimates) {
  if (estimates.empty()) throw ValidationError("ATT of an empty estimate list");
  double sum = 0.0;
  for (const auto& e : estimates) sum += e.ite;
  return sum / static_cast<double>(estimates.size());
}

namespace {

template <class Pred>
CateResult cate_where(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                      std::size_t column, Pred in_slice) {
  if (column >= test.p()) throw ConfigError("CATE covariate index out of range");
  CateResult r;
  double sum = 0.0;
  for (const auto& u : estimates) {
    if (!u.estimate || !test.treated(u.unit) || !in_slice(test.at(u.unit, column))) continue;
    sum += u.estimate->ite;
    ++r.count;
  }
  if (r.count == 0) throw ValidationError("CATE slice holds no treated unit with an estimate");
  r.cate = sum / static_cast<double>(r.count);
  return r;
}

}  // namespace

CateResult cate_by_value(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                         std::size_t column, double value) {
  return cate_where(estimates, test, column, [&](double x) { return x == value; });
}

CateResult cate_by_bin(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                       std::size_t column, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("CATE bin needs lo < hi");
  return cate_where(estimates, test, column, [&](double x) { return x >= lo && x < hi; });
}

double mutual_membership_rate(const MatchedGroup& a, const MatchedGroup& b) {
  if (a.members.empty() || b.members.empty()) {
    throw ValidationError("mutual membership of an empty group");
  }
  std::vector<std::size_t> common;
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(common));
  const double both = static_cast<double>(common.size());
  return std::max(both / static_cast<double>(a.size()), both / static_cast<double>(b.size()));
}

void write_estimates_header(std::ostream& out) {
  csv::write_row(out, {"unit_id", "variant", "ite", "y0_hat", "y1_hat", "n_c", "n_t", "solver"});
}

void write_estimate_row(std::ostream& out, const EffectEstimate& e, const std::string& solver) {
  auto opt = [](const std::optional<double>& v) {
    return v ? csv::format_number(*v) : std::string();
  };
  csv::write_row(out, {e.unit_id, to_string(e.variant), csv::format_number(e.ite), opt(e.y0_hat),
                       opt(e.y1_hat), std::to_string(e.n_c), std::to_string(e.n_t), solver});
}

}  // namespace ahb
