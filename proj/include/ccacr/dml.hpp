#ifndef CCACR_DML_HPP_
#define CCACR_DML_HPP_

#include <cstdint>
#include <vector>

#include "ccacr/dataset.hpp"
#include "ccacr/learners.hpp"

namespace ccacr {

/// Per-row out-of-fold nuisance predictions for the interactive-IV score.
struct NuisanceFits {
  std::vector<double> mu1, mu0;  // E(Y | z~=1, X), E(Y | z~=0, X)
  std::vector<double> m1, m0;    // E(D | z~, X)
  std::vector<double> p;         // E(z~ | X), trimmed
  std::vector<int> fold_assignment;
  std::size_t trimmed_count = 0;  // rows clamped by the trimming rule
};

struct DmlSpecs {
  LearnerSpec learner_y = LearnerSpec::make_forest();
  LearnerSpec learner_d = LearnerSpec::make_forest();
  LearnerSpec learner_z = LearnerSpec::make_forest();
};

struct DmlEstimate {
  double beta = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> per_split_betas;
  std::vector<double> per_split_ses;
  std::size_t folds = 0;
  std::size_t n = 0;
  std::size_t trimmed_count = 0;
  double max_abs_score = 0.0;  // extreme-score diagnostic at the solution
};

/// Cross-fitted nuisances. folds == 1 trains every model on the full
/// sample (no held-out folds); folds >= 2 gives proper out-of-fold
/// predictions. Folds are stratified on z~; a degenerate fold triggers one
/// refold with a fresh permutation before failing.
NuisanceFits crossfit_nuisances(const CollapsedSample& s, const DmlSpecs& specs,
                                std::size_t folds, double eps,
                                std::uint64_t seed);

/// Interactive-IV orthogonal score at one row.
double orthogonal_score(double y, double d, int z_tilde, std::size_t row,
                        double beta, const NuisanceFits& fits);

/// Root of the empirical moment: ratio of the AIPW term means.
/// Returns (beta, numerator, denominator).
struct BetaSolution {
  double beta = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};
BetaSolution solve_beta(const NuisanceFits& fits, const CollapsedSample& s);

/// Plug-in standard error sqrt(mean(phi^2)/n) with phi = -psi/J.
double dml_variance(const NuisanceFits& fits, double beta,
                    const CollapsedSample& s);

DmlEstimate dml_estimate(const CollapsedSample& s, const DmlSpecs& specs,
                         std::size_t folds, std::size_t splits, double eps,
                         std::uint64_t seed, double ci_level = 0.95);

}  // namespace ccacr

#endif  // CCACR_DML_HPP_
