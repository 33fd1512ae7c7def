#ifndef CCACR_LIMTEST_HPP_
#define CCACR_LIMTEST_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccacr/dataset.hpp"
#include "ccacr/learners.hpp"
#include "ccacr/tree.hpp"

namespace ccacr {

/// Per-row AIPW scores for one treatment margin.
struct GammaScores {
  int margin = 0;
  std::vector<double> gamma;
  std::vector<double> tau_oob;  // causal-forest CATE, out of bag
  std::vector<double> mu_oob;   // E(Q | X)
  std::vector<double> e_oob;    // E(z~ | X), trimmed
};

struct LeafTest {
  int leaf_id = -1;
  std::size_t n_leaf = 0;
  double mean_gamma = 0.0;
  double t_train = 0.0;
  std::optional<double> t_holdout;
  bool passed_screen = false;
};

/// One half-sample role within a margin test.
struct HalfSummary {
  std::string tree_text;
  int first_split_feature = -1;  // -1 for a root-only tree
  std::size_t l_max = 0;         // testable leaves (positive variance)
  std::size_t zero_variance_leaves = 0;
  std::size_t skipped_small_leaves = 0;
  std::vector<LeafTest> leaves;
};

struct MarginResult {
  int margin = 0;
  bool reject = false;
  std::optional<double> max_t;
  std::optional<double> threshold;  // final Bonferroni cut-off
  std::vector<double> t_vec;        // confirmatory statistics
  HalfSummary half_a, half_b;       // tree fitted on A resp. B
};

struct LimTestConfig {
  std::size_t min_leaf = 0;  // 0 = max(20, ceil(n/30)), resolved per half
  double alpha = 0.05;
  double eps = 0.01;
  LearnerSpec forest = LearnerSpec::make_forest();  // nuisance forests
  std::size_t prune_folds = 5;
};

struct LimTestReport {
  std::vector<MarginResult> margins;  // j = 1..J
  bool overall_reject = false;
  double alpha = 0.05;
  std::size_t min_leaf = 0;
  std::uint64_t seed = 0;
};

/// Q_{j,i} = I(d_i < j) for integer-coded d.
std::vector<double> pseudo_outcomes(const std::vector<int>& d, int j);

GammaScores gamma_scores(const CollapsedSample& s,
                         const std::vector<double>& q, int margin,
                         const LimTestConfig& cfg, std::uint64_t seed);

/// CART on (x -> gamma) with cost-complexity pruning (5-fold CV, 1-SE).
Tree fit_gamma_tree(const Matrix& x, const std::vector<double>& gamma,
                    std::size_t min_leaf, std::size_t folds,
                    std::uint64_t seed);

MarginResult split_sample_test(const CollapsedSample& s, int margin,
                               const LimTestConfig& cfg, std::uint64_t seed);

LimTestReport lim_test(const CollapsedSample& s, const LimTestConfig& cfg,
                       std::uint64_t seed);

}  // namespace ccacr

#endif  // CCACR_LIMTEST_HPP_
