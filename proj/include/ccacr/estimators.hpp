#ifndef CCACR_ESTIMATORS_HPP_
#define CCACR_ESTIMATORS_HPP_

#include <cstdint>
#include <vector>

#include "ccacr/dataset.hpp"

namespace ccacr {

struct CcAcrEstimate {
  double beta = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  int orientation = 1;  // sign of the denominator; -1 flags negative-LiM
};

struct MarginWeights {
  std::vector<int> margins;        // levels j = 1..J
  std::vector<double> raw;         // P(D<j|z~=0) - P(D<j|z~=1)
  std::vector<double> normalized;  // raw / sum(raw), when sum > 0
  bool normalization_defined = false;
  bool lim_consistent = true;  // all raw >= -tolerance
};

struct WeightCurve {
  std::vector<double> grid;
  std::vector<double> raw;         // P(D>=t|z~=1) - P(D>=t|z~=0)
  std::vector<double> normalized;  // raw / trapezoidal integral
  std::vector<bool> violation;     // raw < 0 at the grid point
  double integral = 0.0;
};

struct TslsDecomposition {
  /// Support points ordered by first-stage mean (equal means merged).
  std::vector<std::vector<std::vector<int>>> support_assignments;  // members
  std::vector<double> first_stage_means;              // E(D|Z=z_m)
  std::vector<double> outcome_means;                  // E(Y|Z=z_m)
  std::vector<double> probs;                          // P(Z=z_m)
  std::vector<double> omega;                          // omega_m, m=1..M
  std::vector<double> delta;                          // delta_m
  std::vector<double> beta_wald;                      // beta_{m,m-1}
  std::vector<double> mu;                             // delta_m * omega_m
  double beta_tsls = 0.0;
};

struct DominanceTest {
  double statistic = 0.0;  // sup_t max(0, F1(t) - F0(t))
  double p_value = 1.0;
  std::vector<double> crossings;  // grid points where F1 > F0
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
};

/// Subsample Wald ratio of mean differences, with a delta-method standard
/// error treating the two z~ groups as independent.
CcAcrEstimate cc_acr_wald(const CollapsedSample& s, double ci_level = 0.95);

/// Empirical per-margin weights for integer-coded treatment 0..J.
MarginWeights margin_weights(const CollapsedSample& s, double tol = 1e-12);

WeightCurve weight_curve_continuous(const CollapsedSample& s,
                                    const std::vector<double>& grid);

TslsDecomposition tsls_decomposition(const IvDataset& data);

/// Two-stage estimate with a saturated first stage (group means per
/// realized assignment); independent cross-check for the decomposition.
double tsls_saturated(const IvDataset& data);

DominanceTest ks_dominance_test(const CollapsedSample& s, std::size_t resamples,
                                std::uint64_t seed);

}  // namespace ccacr

#endif  // CCACR_ESTIMATORS_HPP_
