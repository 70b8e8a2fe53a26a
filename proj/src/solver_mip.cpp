#include "ahb/solver_mip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/parallel.hpp"
#include "ahb/tuning.hpp"

namespace ahb {

Preprocess Preprocess::parse(const std::string& text) {
  if (text.empty() || text == "none") return none();
  const auto colon = text.find(':');
  const std::string mode = text.substr(0, colon);
  if (colon == std::string::npos) throw ConfigError("preprocess '" + text + "' needs a value");
  const std::string value = text.substr(colon + 1);
  auto number = [&]() {
    if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
    try {
      return csv::parse_number(value, "preprocess option");
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  };
  if (mode == "sort") {
    const double d = number();
    if (!(d >= 1.0) || d != std::floor(d) || std::isinf(d)) {
      throw ConfigError("sort preprocessing needs a positive integer d");
    }
    return sort(static_cast<std::size_t>(d));
  }
  if (mode == "threshold_l") return threshold_l(number());
  if (mode == "threshold_coord") return threshold_coord(number());
  throw ConfigError("unknown preprocess mode '" + mode + "'");
}

std::string Preprocess::to_string() const {
  auto eps = [&] { return std::isinf(epsilon) ? std::string("inf") : csv::format_number(epsilon); };
  switch (mode) {
    case PreprocessMode::kNone: return "none";
    case PreprocessMode::kSort: return "sort:" + std::to_string(d);
    case PreprocessMode::kThresholdL: return "threshold_l:" + eps();
    case PreprocessMode::kThresholdCoord: return "threshold_coord:" + eps();
  }
  return "none";
}

double unit_cost(std::size_t i, std::size_t k, const UnitPredictions& predictions,
                 const LossWeights& weights) {
  return weights.gamma1 * std::abs(predictions.f1[i] - predictions.f1[k]) +
         weights.gamma0 * std::abs(predictions.f0[i] - predictions.f0[k]);
}

std::vector<double> unit_costs(std::size_t i, const UnitPredictions& predictions,
                               const LossWeights& weights) {
  std::vector<double> costs(predictions.f0.size());
  for (std::size_t k = 0; k < costs.size(); ++k) costs[k] = unit_cost(i, k, predictions, weights);
  return costs;
}

namespace {

// Correctly rounded floating-point summation (Shewchuk partials). The result
// does not depend on the order of the terms.
class ExactSum {
 public:
  void add(double x) {
    std::size_t kept = 0;
    for (std::size_t r = 0; r < partials_.size(); ++r) {
      double y = partials_[r];
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[kept++] = lo;
      x = hi;
    }
    partials_.resize(kept);
    partials_.push_back(x);
  }

  double value() const {
    std::size_t n = partials_.size();
    if (n == 0) return 0.0;
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace

double objective(const MatchedGroup& group, const std::vector<double>& costs, double beta) {
  ExactSum sum;
  for (auto k : group.members) {
    sum.add(costs[k]);
    sum.add(-beta);
  }
  return sum.value();
}

LossWeights effective_weights(const SolverParams& params, const UnitPredictions& predictions) {
  if (!params.normalize) return params.weights;
  auto [g0, g1] = normalize_gammas(params.weights.gamma0, params.weights.gamma1, predictions);
  return LossWeights{g0, g1, params.weights.beta};
}

namespace {

void validate(const SolverParams& params, const Dataset& test, std::size_t i) {
  if (params.m < 1) throw ConfigError("m must be at least 1");
  if (params.weights.gamma0 < 0 || params.weights.gamma1 < 0 || params.weights.beta < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (params.preprocess.mode == PreprocessMode::kSort &&
      params.preprocess.d < static_cast<std::size_t>(params.m)) {
    throw ConfigError("sort preprocessing needs d >= m");
  }
  if (i >= test.n()) throw ConfigError("unit index out of range");
}

std::string unit_label(const Dataset& test, std::size_t i) {
  return "unit '" + test.unit_id(i) + "'";
}

std::vector<std::size_t> filter_candidates(std::size_t i, const Dataset& test,
                                           const std::vector<double>& costs,
                                           const SolverParams& params) {
  std::vector<std::size_t> base;
  for (std::size_t k = 0; k < test.n(); ++k) {
    if (k != i && params.exclude_same_arm && test.arm(k) == test.arm(i)) continue;
    base.push_back(k);
  }
  const auto& pre = params.preprocess;
  std::vector<std::size_t> kept;
  switch (pre.mode) {
    case PreprocessMode::kNone:
      kept = base;
      break;
    case PreprocessMode::kThresholdL:
      for (auto k : base) {
        if (k == i || costs[k] <= pre.epsilon) kept.push_back(k);
      }
      break;
    case PreprocessMode::kThresholdCoord:
      for (auto k : base) {
        bool close = true;
        for (std::size_t j = 0; j < test.p() && close; ++j) {
          close = std::abs(test.at(i, j) - test.at(k, j)) <= pre.epsilon;
        }
        if (k == i || close) kept.push_back(k);
      }
      break;
    case PreprocessMode::kSort: {
      for (Arm arm : {Arm::kControl, Arm::kTreated}) {
        std::vector<std::size_t> pool;
        for (auto k : base) {
          if (k != i && test.arm(k) == arm) pool.push_back(k);
        }
        const std::size_t keep = std::min(pre.d, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                          [&](std::size_t a, std::size_t b) {
                            return costs[a] < costs[b] || (costs[a] == costs[b] && a < b);
                          });
        kept.insert(kept.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
      }
      kept.push_back(i);
      std::sort(kept.begin(), kept.end());
      break;
    }
  }
  return kept;
}

// Ordering used to pick among optimal boxes: objective, then volume of the
// tight box, then its bounds (lower..., upper...) lexicographically.
struct Key {
  double objective = 0.0;
  double volume = 0.0;
  std::vector<double> bounds;

  bool operator<(const Key& other) const {
    if (objective != other.objective) return objective < other.objective;
    if (volume != other.volume) return volume < other.volume;
    return bounds < other.bounds;
  }
};

// Everything the search needs about one unit's subproblem.
class Subproblem {
 public:
  Subproblem(std::size_t i, const Dataset& test, const UnitPredictions& predictions,
             const SolverParams& params)
      : i_(i), test_(test), params_(params) {
    validate(params, test, i);
    weights_ = effective_weights(params, predictions);
    costs_ = unit_costs(i, predictions, weights_);
    candidates_ = filter_candidates(i, test, costs_, params);
    std::size_t controls = 0;
    for (auto k : candidates_) controls += test.treated(k) ? 0 : 1;
    if (controls < static_cast<std::size_t>(params.m)) {
      throw InfeasibleError(unit_label(test, i) + ": only " + std::to_string(controls) +
                            " control candidates, need " + std::to_string(params.m));
    }
    const std::size_t p = test.p();
    lows_.resize(p);
    highs_.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double xi = test.at(i, j);
      for (auto k : candidates_) {
        const double v = test.at(k, j);
        if (v <= xi) lows_[j].push_back(v);
        if (v >= xi) highs_[j].push_back(v);
      }
      std::sort(lows_[j].begin(), lows_[j].end(), std::greater<>());
      lows_[j].erase(std::unique(lows_[j].begin(), lows_[j].end()), lows_[j].end());
      std::sort(highs_[j].begin(), highs_[j].end());
      highs_[j].erase(std::unique(highs_[j].begin(), highs_[j].end()), highs_[j].end());
    }
  }

  std::size_t owner() const { return i_; }
  const Dataset& test() const { return test_; }
  const std::vector<std::size_t>& candidates() const { return candidates_; }
  const std::vector<double>& costs() const { return costs_; }
  double beta() const { return weights_.beta; }
  std::size_t m() const { return static_cast<std::size_t>(params_.m); }
  const std::vector<std::vector<double>>& lows() const { return lows_; }
  const std::vector<std::vector<double>>& highs() const { return highs_; }

  double weight(std::size_t k) const { return costs_[k] - weights_.beta; }

  // Key of the group formed by sorted `members` (all candidates).
  Key key(const std::vector<std::size_t>& members) const {
    const auto group = make_group(i_, members, test_);
    const auto box = tight_box(group, test_);
    Key key;
    key.objective = objective(group, costs_, weights_.beta);
    key.volume = box.volume();
    key.bounds = box.lower;
    key.bounds.insert(key.bounds.end(), box.upper.begin(), box.upper.end());
    return key;
  }

  std::size_t controls(const std::vector<std::size_t>& members) const {
    std::size_t c = 0;
    for (auto k : members) c += test_.treated(k) ? 0 : 1;
    return c;
  }

  BoxSolution finish(const std::vector<std::size_t>& members) const {
    BoxSolution solution;
    solution.group = make_group(i_, members, test_);
    solution.box = tight_box(solution.group, test_);
    solution.objective = objective(solution.group, costs_, weights_.beta);
    solution.optimal = true;
    for (auto k : candidates_) solution.unit_costs.emplace_back(k, costs_[k]);
    return solution;
  }

 private:
  std::size_t i_;
  const Dataset& test_;
  const SolverParams& params_;
  LossWeights weights_;
  std::vector<double> costs_;
  std::vector<std::size_t> candidates_;
  // Distinct candidate coordinates per covariate: lows_ descending from x_ij,
  // highs_ ascending from x_ij. Index 0 is the owner's own value.
  std::vector<std::vector<double>> lows_;
  std::vector<std::vector<double>> highs_;
};

// A set of boxes: every lower bound j ranges over lows[j][a_lo..a_hi] and
// every upper bound over highs[j][b_lo..b_hi]. The inner box uses the *_lo
// indices, the outer box the *_hi indices.
struct Node {
  std::vector<int> a_lo, a_hi, b_lo, b_hi;
  std::vector<std::size_t> members;  // candidates inside the outer box
  double bound = 0.0;  // lower bound on any objective in the node
  double volume_bound = 0.0;
  std::vector<double> bounds_floor;  // componentwise floor on tight-box bounds
  bool feasible = true;
};

class BranchAndBound {
 public:
  explicit BranchAndBound(const Subproblem& sub) : sub_(sub), p_(sub.test().p()) {}

  std::vector<std::size_t> run() {
    Node root;
    root.a_lo.assign(p_, 0);
    root.b_lo.assign(p_, 0);
    root.a_hi.resize(p_);
    root.b_hi.resize(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      root.a_hi[j] = static_cast<int>(sub_.lows()[j].size()) - 1;
      root.b_hi[j] = static_cast<int>(sub_.highs()[j].size()) - 1;
    }
    root.members = sub_.candidates();
    evaluate(root);

    std::vector<Node> stack;
    if (root.feasible) stack.push_back(std::move(root));
    while (!stack.empty()) {
      Node node = std::move(stack.back());
      stack.pop_back();
      if (prunable(node)) continue;
      ++nodes_;

      // Branch on the widest remaining index range.
      int best_range = 0;
      std::size_t best_j = 0;
      int which = -1;  // 0: lower bound, 1: upper bound
      for (std::size_t j = 0; j < p_; ++j) {
        if (node.a_hi[j] - node.a_lo[j] > best_range) {
          best_range = node.a_hi[j] - node.a_lo[j];
          best_j = j;
          which = 0;
        }
        if (node.b_hi[j] - node.b_lo[j] > best_range) {
          best_range = node.b_hi[j] - node.b_lo[j];
          best_j = j;
          which = 1;
        }
      }
      if (which < 0) continue;  // leaf: inner == outer, already evaluated

      Node inner = node;
      Node outer = std::move(node);
      if (which == 0) {
        const int mid = (inner.a_lo[best_j] + inner.a_hi[best_j]) / 2;
        inner.a_hi[best_j] = mid;
        outer.a_lo[best_j] = mid + 1;
      } else {
        const int mid = (inner.b_lo[best_j] + inner.b_hi[best_j]) / 2;
        inner.b_hi[best_j] = mid;
        outer.b_lo[best_j] = mid + 1;
      }
      shrink_members(inner);
      evaluate(inner);
      evaluate(outer);
      // Explore the child with the smaller bound first.
      const bool inner_first = !(outer.bound < inner.bound);
      if (inner_first) {
        if (outer.feasible) stack.push_back(std::move(outer));
        if (inner.feasible) stack.push_back(std::move(inner));
      } else {
        if (inner.feasible) stack.push_back(std::move(inner));
        if (outer.feasible) stack.push_back(std::move(outer));
      }
    }
    if (!best_) {
      throw InfeasibleError(unit_label(sub_.test(), sub_.owner()) +
                            ": no box holds the required controls");
    }
    return best_members_;
  }

  std::size_t nodes() const { return nodes_; }

 private:
  double lower(const Node& n, std::size_t j, bool outer) const {
    return sub_.lows()[j][static_cast<std::size_t>(outer ? n.a_hi[j] : n.a_lo[j])];
  }
  double upper(const Node& n, std::size_t j, bool outer) const {
    return sub_.highs()[j][static_cast<std::size_t>(outer ? n.b_hi[j] : n.b_lo[j])];
  }

  bool inside(const Node& n, std::size_t k, bool outer) const {
    for (std::size_t j = 0; j < p_; ++j) {
      const double v = sub_.test().at(k, j);
      if (v < lower(n, j, outer) || v > upper(n, j, outer)) return false;
    }
    return true;
  }

  void shrink_members(Node& n) const {
    std::vector<std::size_t> kept;
    kept.reserve(n.members.size());
    for (auto k : n.members) {
      if (inside(n, k, true)) kept.push_back(k);
    }
    n.members = std::move(kept);
  }

  void offer(const std::vector<std::size_t>& members) {
    if (sub_.controls(members) < sub_.m()) return;
    Key key = sub_.key(members);
    if (!best_ || key < *best_) {
      best_ = std::move(key);
      best_members_ = members;
    }
  }

  // Computes the node's bounds and offers its inner and outer boxes as
  // incumbents.
  void evaluate(Node& n) {
    const auto& test = sub_.test();
    const std::size_t m = sub_.m();
    std::size_t outer_controls = 0;
    std::size_t inner_controls = 0;
    std::size_t negative_ring_controls = 0;
    ExactSum bound;
    std::vector<std::size_t> inner_members;
    std::vector<std::size_t> ring_controls;
    std::vector<double> inner_min(p_), inner_max(p_);
    for (std::size_t j = 0; j < p_; ++j) inner_min[j] = inner_max[j] = test.at(sub_.owner(), j);
    n.bounds_floor.assign(2 * p_, 0.0);
    for (std::size_t j = 0; j < p_; ++j) n.bounds_floor[j] = test.at(sub_.owner(), j);

    for (auto k : n.members) {
      const bool control = !test.treated(k);
      const double w = sub_.weight(k);
      outer_controls += control ? 1 : 0;
      for (std::size_t j = 0; j < p_; ++j) {
        n.bounds_floor[j] = std::min(n.bounds_floor[j], test.at(k, j));
      }
      if (inside(n, k, false)) {
        inner_members.push_back(k);
        bound.add(sub_.costs()[k]);
        bound.add(-sub_.beta());
        inner_controls += control ? 1 : 0;
        for (std::size_t j = 0; j < p_; ++j) {
          inner_min[j] = std::min(inner_min[j], test.at(k, j));
          inner_max[j] = std::max(inner_max[j], test.at(k, j));
        }
      } else if (w < 0) {
        bound.add(sub_.costs()[k]);
        bound.add(-sub_.beta());
        negative_ring_controls += control ? 1 : 0;
      } else if (control) {
        ring_controls.push_back(k);
      }
    }
    n.feasible = outer_controls >= m;
    if (!n.feasible) return;

    const std::size_t have = inner_controls + negative_ring_controls;
    if (have < m) {
      const std::size_t need = m - have;
      std::partial_sort(ring_controls.begin(),
                        ring_controls.begin() + static_cast<std::ptrdiff_t>(need),
                        ring_controls.end(), [&](std::size_t a, std::size_t b) {
                          return sub_.weight(a) < sub_.weight(b);
                        });
      for (std::size_t r = 0; r < need; ++r) {
        bound.add(sub_.costs()[ring_controls[r]]);
        bound.add(-sub_.beta());
      }
    }
    n.bound = bound.value();
    n.volume_bound = 1.0;
    for (std::size_t j = 0; j < p_; ++j) {
      n.volume_bound *= inner_max[j] - inner_min[j];
      n.bounds_floor[p_ + j] = inner_max[j];
    }

    offer(n.members);
    if (inner_members.size() != n.members.size()) offer(inner_members);
  }

  // True when no box in the node can beat the incumbent under Key ordering.
  bool prunable(const Node& n) const {
    if (!best_) return false;
    if (n.bound > best_->objective) return true;
    if (n.bound < best_->objective) return false;
    // Objective can at best tie; fall back to volume, then bounds.
    if (n.volume_bound != best_->volume) return n.volume_bound > best_->volume;
    return n.bounds_floor > best_->bounds;
  }

  const Subproblem& sub_;
  std::size_t p_;
  std::optional<Key> best_;
  std::vector<std::size_t> best_members_;
  std::size_t nodes_ = 0;
};

}  // namespace

std::vector<std::size_t> preprocess(std::size_t i, const Dataset& test,
                                    const UnitPredictions& predictions,
                                    const SolverParams& params) {
  return Subproblem(i, test, predictions, params).candidates();
}

BoxSolution solve_exact(std::size_t i, const Dataset& test, const UnitPredictions& predictions,
                        const SolverParams& params) {
  const Subproblem sub(i, test, predictions, params);
  BranchAndBound search(sub);
  return sub.finish(search.run());
}

BoxSolution solve_exact(std::size_t i, const Dataset& test, const OutcomeModel& model,
                        const SolverParams& params) {
  return solve_exact(i, test, predict_units(model, test), params);
}

BoxSolution brute_force_oracle(std::size_t i, const Dataset& test,
                               const UnitPredictions& predictions, const SolverParams& params) {
  const Subproblem sub(i, test, predictions, params);
  const std::size_t p = test.p();
  if (sub.candidates().size() > kOracleMaxCandidates || p > kOracleMaxDims) {
    throw ConfigError("instance too large for brute-force enumeration (" +
                      std::to_string(sub.candidates().size()) + " candidates, " +
                      std::to_string(p) + " covariates)");
  }
  // Odometer over (lower index, upper index) for every covariate.
  std::vector<std::size_t> radix;
  for (std::size_t j = 0; j < p; ++j) {
    radix.push_back(sub.lows()[j].size());
    radix.push_back(sub.highs()[j].size());
  }
  std::vector<std::size_t> digit(radix.size(), 0);
  std::optional<Key> best;
  std::vector<std::size_t> best_members;
  for (;;) {
    std::vector<std::size_t> members;
    for (auto k : sub.candidates()) {
      bool in = true;
      for (std::size_t j = 0; j < p && in; ++j) {
        const double v = test.at(k, j);
        in = v >= sub.lows()[j][digit[2 * j]] && v <= sub.highs()[j][digit[2 * j + 1]];
      }
      if (in) members.push_back(k);
    }
    if (sub.controls(members) >= sub.m()) {
      Key key = sub.key(members);
      if (!best || key < *best) {
        best = std::move(key);
        best_members = members;
      }
    }
    std::size_t d = 0;
    while (d < digit.size() && ++digit[d] == radix[d]) digit[d++] = 0;
    if (d == digit.size()) break;
  }
  if (!best) {
    throw InfeasibleError(unit_label(test, i) + ": no box holds the required controls");
  }
  return sub.finish(best_members);
}

std::vector<UnitResult> solve_all(const Dataset& test, const UnitPredictions& predictions,
                                  const SolverParams& params, int workers,
                                  const std::vector<std::size_t>& units) {
  std::vector<std::size_t> order = units;
  if (order.empty()) {
    order.resize(test.n());
    std::iota(order.begin(), order.end(), 0);
  }
  SolverParams resolved = params;
  if (params.normalize && !order.empty()) {
    resolved.weights = effective_weights(params, predictions);
    resolved.normalize = false;
  }
  std::vector<UnitResult> results(order.size());
  parallel_for(order.size(), workers, [&](std::size_t idx) {
    UnitResult& r = results[idx];
    r.unit = order[idx];
    try {
      r.solution = solve_exact(r.unit, test, predictions, resolved);
    } catch (const InfeasibleError& e) {
      r.error = e.what();
    }
  });
  return results;
}

}  // namespace ahb
