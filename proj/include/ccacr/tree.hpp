#ifndef CCACR_TREE_HPP_
#define CCACR_TREE_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ccacr/common.hpp"

namespace ccacr {

/// Binary regression tree node. Leaf iff left < 0.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // node prediction
  std::size_t n = 0;   // training rows in node
  double sse = 0.0;    // training SSE at this node if it were a leaf
};

class Tree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  bool empty() const { return nodes.empty(); }

  double predict_row(const Matrix& x, std::size_t row) const;
  int leaf_index(const Matrix& x, std::size_t row) const;

  std::vector<int> leaf_ids() const;
  std::size_t n_leaves() const { return leaf_ids().size(); }

  /// Feature of the root split, or -1 for a root-only tree.
  int first_split_feature() const {
    return nodes.empty() ? -1 : nodes[0].feature;
  }

  std::string render(const std::vector<std::string>& feature_names) const;
};

struct TreeConfig {
  std::size_t min_leaf = 5;
  std::size_t mtry = 0;    // 0 = all features
  int max_depth = -1;      // -1 = unlimited
};

/// Variance-reduction CART on (x -> y) restricted to `rows`.
Tree build_regression_tree(const Matrix& x, const std::vector<double>& y,
                           const std::vector<std::size_t>& rows,
                           const TreeConfig& cfg, std::mt19937_64& rng);

/// Causal tree: splits maximize heterogeneity of the within-leaf
/// difference in means of y across the binary w. Every child must keep
/// both w groups.
Tree build_causal_tree(const Matrix& x, const std::vector<int>& w,
                       const std::vector<double>& y,
                       const std::vector<std::size_t>& rows,
                       const TreeConfig& cfg, std::mt19937_64& rng);

/// Collapse every internal node whose weakest-link value is <= alpha.
Tree prune_to_alpha(const Tree& tree, double alpha);

/// Cost-complexity pruning with the penalty chosen by k-fold CV on squared
/// error, taking the smallest tree within one standard error of the CV
/// minimum.
Tree prune_tree_cv(const Matrix& x, const std::vector<double>& y,
                   const Tree& full, std::size_t min_leaf, std::size_t folds,
                   std::uint64_t seed);

}  // namespace ccacr

#endif  // CCACR_TREE_HPP_
