#ifndef CCACR_LEARNERS_HPP_
#define CCACR_LEARNERS_HPP_

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ccacr/common.hpp"
#include "ccacr/tree.hpp"

namespace ccacr {

struct LearnerSpec {
  enum class Kind { Mean, Lasso, Forest, Boost };
  Kind kind = Kind::Forest;

  struct LassoParams {
    std::vector<double> lambda_grid;  // empty = automatic path
    int interaction_order = 1;        // 1, 2 or 3
    std::size_t column_cap = 5000;
    std::size_t cv_folds = 5;
  } lasso;

  struct ForestParams {
    std::size_t n_trees = 500;
    std::size_t min_leaf = 25;
    std::size_t mtry = 0;  // 0 = p/3, at least 1
    double honest_fraction = 0.5;
    double subsample_fraction = 0.5;  // causal forest only
  } forest;

  struct BoostParams {
    std::size_t n_trees = 200;
    int depth = 2;
    double shrinkage = 0.1;
    std::size_t min_leaf = 10;
  } boost;

  static LearnerSpec mean();
  static LearnerSpec make_lasso(int interaction_order = 1);
  static LearnerSpec make_forest(std::size_t n_trees = 500,
                                 std::size_t min_leaf = 25,
                                 std::size_t mtry = 0);
  static LearnerSpec make_boost(std::size_t n_trees = 200, int depth = 2,
                                double shrinkage = 0.1);

  /// Parses "lasso:order=2", "forest:trees=500,minleaf=25,mtry=3",
  /// "boost:trees=300,depth=2,shrink=0.1", "mean".
  static LearnerSpec parse(const std::string& text);
  std::string describe() const;

  void validate() const;
};

class RegressionModel {
 public:
  virtual ~RegressionModel() = default;
  virtual double predict(const Matrix& x, std::size_t row) const = 0;

  std::vector<double> predict_all(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x, i);
    return out;
  }
};

struct FittedModel {
  std::shared_ptr<const RegressionModel> model;
  /// Out-of-bag predictions per training row (forests only).
  std::vector<double> oob_predictions;
  std::vector<bool> oob_defined;
  double training_rmse_cv = std::numeric_limits<double>::quiet_NaN();

  double predict(const Matrix& x, std::size_t row) const {
    return model->predict(x, row);
  }
};

struct CausalForestModel {
  std::vector<Tree> trees;                 // honest causal trees
  std::vector<double> tau_oob;             // per training row
  std::vector<bool> oob_defined;

  double predict_tau(const Matrix& x, std::size_t row) const;
};

FittedModel fit_lasso(const Matrix& x, const std::vector<double>& y,
                      const LearnerSpec& spec, std::uint64_t seed);

FittedModel fit_forest(const Matrix& x, const std::vector<double>& y,
                       const LearnerSpec& spec, std::uint64_t seed);

FittedModel fit_boost(const Matrix& x, const std::vector<double>& y,
                      const LearnerSpec& spec, std::uint64_t seed);

CausalForestModel fit_causal_forest(const Matrix& x, const std::vector<int>& w,
                                    const std::vector<double>& y,
                                    const LearnerSpec& spec,
                                    std::uint64_t seed);

/// Dispatch on spec.kind.
FittedModel fit_learner(const Matrix& x, const std::vector<double>& y,
                        const LearnerSpec& spec, std::uint64_t seed);

struct CvReport {
  std::vector<std::string> candidate_names;
  std::vector<double> rmse;  // cross-fitted RMSE per candidate
  std::size_t best_index = 0;
};

std::pair<LearnerSpec, CvReport> select_learner(
    const std::vector<LearnerSpec>& candidates, const Matrix& x,
    const std::vector<double>& y, std::size_t folds, std::uint64_t seed);

/// Clamp predicted propensities to [eps, 1-eps].
std::vector<double> trim_propensity(std::vector<double> p, double eps = 0.01);

}  // namespace ccacr

#endif  // CCACR_LEARNERS_HPP_
