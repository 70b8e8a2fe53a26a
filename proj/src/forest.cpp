#include "ahb/forest.hpp"

#include <algorithm>
#include <numeric>

namespace ahb {

void RegressionTree::fit(std::span<const double> x, std::size_t p, std::span<const double> y,
                         const std::vector<std::size_t>& rows, const TreeOptions& options) {
  nodes_.clear();
  std::vector<std::size_t> work = rows;
  grow(x, p, y, work, 0, work.size(), 0, options);
}

int RegressionTree::grow(std::span<const double> x, std::size_t p, std::span<const double> y,
                         std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                         int depth, const TreeOptions& options) {
  const std::size_t count = end - begin;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    sum += y[rows[r]];
    sum_sq += y[rows[r]] * y[rows[r]];
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].value = sum / static_cast<double>(count);

  const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
  const double node_sse = sum_sq - sum * sum / static_cast<double>(count);
  if (depth >= options.max_depth || count < 2 * min_leaf || node_sse <= 1e-12 * (1.0 + sum_sq)) {
    return id;
  }

  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = 0.0;
  std::vector<std::size_t> sorted(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                  rows.begin() + static_cast<std::ptrdiff_t>(end));
  for (std::size_t f = 0; f < p; ++f) {
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return x[a * p + f] < x[b * p + f];
    });
    double left_sum = 0.0;
    double left_sq = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double v = y[sorted[k]];
      left_sum += v;
      left_sq += v * v;
      const std::size_t n_left = k + 1;
      const std::size_t n_right = count - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double here = x[sorted[k] * p + f];
      const double next = x[sorted[k + 1] * p + f];
      if (!(here < next)) continue;
      const double right_sum = sum - left_sum;
      const double right_sq = sum_sq - left_sq;
      const double sse = (left_sq - left_sum * left_sum / static_cast<double>(n_left)) +
                         (right_sq - right_sum * right_sum / static_cast<double>(n_right));
      const double gain = node_sse - sse;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = here + (next - here) / 2.0;
      }
    }
  }
  if (best_feature < 0 || best_gain <= 1e-12 * (1.0 + node_sse)) return id;

  auto mid_it = std::partition(
      rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return x[r * p + static_cast<std::size_t>(best_feature)] <= best_threshold; });
  const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

  const int left = grow(x, p, y, rows, begin, mid, depth + 1, options);
  const int right = grow(x, p, y, rows, mid, end, depth + 1, options);
  nodes_[id].feature = best_feature;
  nodes_[id].threshold = best_threshold;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double RegressionTree::predict(std::span<const double> features) const {
  int node = 0;
  while (nodes_[node].feature >= 0) {
    const auto& n = nodes_[node];
    node = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[node].value;
}

void BaggedForest::fit(std::span<const double> x, std::size_t p, std::span<const double> y,
                       int trees, const TreeOptions& options, Rng& rng) {
  const std::size_t n = y.size();
  trees_.assign(static_cast<std::size_t>(trees), RegressionTree{});
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& tree : trees_) {
    for (auto& r : rows) r = pick(rng);
    tree.fit(x, p, y, rows, options);
  }
}

std::vector<double> BaggedForest::predict_all(std::span<const double> features) const {
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& tree : trees_) out.push_back(tree.predict(features));
  return out;
}

double BaggedForest::predict(std::span<const double> features) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.predict(features);
  return sum / static_cast<double>(trees_.size());
}

}  // namespace ahb
