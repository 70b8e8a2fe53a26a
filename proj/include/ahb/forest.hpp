#ifndef AHB_FOREST_HPP
#define AHB_FOREST_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "ahb/random.hpp"

namespace ahb {

struct TreeOptions {
  int max_depth = 6;
  int min_leaf = 5;
};

// CART regression tree grown by greedy squared-error reduction.
class RegressionTree {
 public:
  // `x` is row-major with `p` columns; `rows` selects (possibly repeated)
  // training rows.
  void fit(std::span<const double> x, std::size_t p, std::span<const double> y,
           const std::vector<std::size_t>& rows, const TreeOptions& options);

  double predict(std::span<const double> features) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  int grow(std::span<const double> x, std::size_t p, std::span<const double> y,
           std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, int depth,
           const TreeOptions& options);

  std::vector<Node> nodes_;
};

// Bootstrap-aggregated regression trees.
class BaggedForest {
 public:
  void fit(std::span<const double> x, std::size_t p, std::span<const double> y, int trees,
           const TreeOptions& options, Rng& rng);

  // Per-tree predictions in tree order.
  std::vector<double> predict_all(std::span<const double> features) const;

  // Mean of predict_all(), computed with the same summation order.
  double predict(std::span<const double> features) const;

  std::size_t size() const { return trees_.size(); }

 private:
  std::vector<RegressionTree> trees_;
};

}  // namespace ahb

#endif  // AHB_FOREST_HPP
