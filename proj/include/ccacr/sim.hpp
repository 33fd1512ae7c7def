#ifndef CCACR_SIM_HPP_
#define CCACR_SIM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccacr/dataset.hpp"
#include "ccacr/estimators.hpp"
#include "ccacr/limtest.hpp"
#include "ccacr/types.hpp"

namespace ccacr {

/// One response-type share, optionally restricted to a covariate stratum
/// (e.g. south=1). Treatment positions are level codes 0..J.
struct TypeShareEntry {
  CombinedType type;
  double share = 0.0;
  std::optional<std::string> condition_covariate;  // entry applies where ==1
};

struct TypeShareSpec {
  std::vector<TypeShareEntry> entries;

  void validate() const;  // shares >= 0 and sum to 1 within 1e-12
};

/// Equicorrelated latent Gaussian covariates binarized at per-coordinate
/// thresholds chosen to hit `probs`.
struct CovariateModel {
  std::vector<std::string> names = {"south", "x2", "x3", "x4"};
  std::vector<double> probs = {0.3, 0.5, 0.5, 0.5};
  double correlation = 0.2;
};

struct ScenarioConfig {
  std::string name;
  std::size_t n = 1500;
  double p_ztilde = 0.5;
  std::vector<double> levels = {12, 13, 14};
  CovariateModel covariates;
  TypeShareSpec shares;

  void validate() const;
};

struct McReport {
  std::size_t reps = 0;
  std::size_t failed_reps = 0;
  std::vector<int> margins;                 // 1..J
  std::vector<std::size_t> reject_counts;   // per margin
  std::vector<double> reject_rates;         // per margin
  /// Among reps rejecting a margin: count of first splits per covariate of
  /// the tree whose confirmatory leaf achieved the max statistic.
  std::vector<std::vector<std::size_t>> first_split_counts;  // margin x cov
  double seconds = 0.0;
  ScenarioConfig config;
};

/// Named presets "lim-valid" and "lim-violated".
std::vector<ScenarioConfig> builtin_scenarios();
ScenarioConfig builtin_scenario(const std::string& name);

/// Draws one dataset. The treatment is already level-coded 0..J.
CollapsedSample generate_scenario(const ScenarioConfig& config,
                                  std::uint64_t seed);

/// Analytic per-margin weights implied by the shares (unconditional):
/// raw_j = sum over types of share * [I(d00 < j) - I(d11 < j)].
std::vector<double> population_margin_weights(const TypeShareSpec& shares,
                                              int J);

McReport run_monte_carlo(const ScenarioConfig& config, std::size_t reps,
                         const LimTestConfig& test, std::uint64_t seed);

/// Randomized linear DGP with a homogeneous effect, for coverage tests:
/// z~ Bernoulli(1/2), binary covariates, d = base(x) + complier * z~,
/// y = beta * d + x-effects + N(0,1).
CollapsedSample generate_linear_dgp(std::size_t n, double beta,
                                    std::uint64_t seed);

}  // namespace ccacr

#endif  // CCACR_SIM_HPP_
