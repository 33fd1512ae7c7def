#include <cmath>
#include <vector>

#include "ccacr/estimators.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ccacr;
using ccacr::testing::random_iv_dataset;
using ccacr::testing::two_type_dgp;

namespace {

CollapsedSample make_sample(std::vector<int> z, std::vector<double> y,
                            std::vector<double> d) {
  CollapsedSample s;
  s.z_tilde = std::move(z);
  s.y = std::move(y);
  s.d = std::move(d);
  s.x = Matrix(s.n(), 0);
  for (std::size_t i = 0; i < s.n(); ++i) {
    s.parent_indices.push_back(i);
    (s.z_tilde[i] == 1 ? s.n1 : s.n0)++;
  }
  return s;
}

}  // namespace

TEST_CASE("Wald ratio and delta-method SE against hand computation") {
  // z~=1: y {3,5}, d {1,2}; z~=0: y {1,1}, d {0,1}.
  auto s = make_sample({1, 1, 0, 0}, {3, 5, 1, 1}, {1, 2, 0, 1});
  CcAcrEstimate e = cc_acr_wald(s);
  CHECK(e.numerator == doctest::Approx(3.0));
  CHECK(e.denominator == doctest::Approx(1.0));
  CHECK(e.beta == doctest::Approx(3.0));
  CHECK(e.orientation == 1);
  // var_num = 2/2, var_den = 0.5/2 + 0.5/2, cov = 1/2; v = 1 - 3 + 4.5.
  CHECK(e.se == doctest::Approx(std::sqrt(2.5)));
  CHECK(e.ci_low == doctest::Approx(3.0 - 1.959963985 * e.se).epsilon(1e-6));
  CHECK(e.ci_high == doctest::Approx(3.0 + 1.959963985 * e.se).epsilon(1e-6));
  CHECK(e.n1 == 2);
  CHECK(e.n0 == 2);
}

TEST_CASE("Wald flags negative orientation and degenerate inputs") {
  auto flipped = make_sample({1, 1, 0, 0}, {1, 1, 3, 5}, {0, 1, 1, 2});
  CHECK(cc_acr_wald(flipped).orientation == -1);

  auto degenerate = make_sample({1, 1, 0, 0}, {1, 2, 3, 4}, {1, 1, 1, 1});
  CHECK_THROWS_AS(cc_acr_wald(degenerate), DataError);
  auto tiny = make_sample({1, 0, 0}, {1, 2, 3}, {1, 0, 0});
  CHECK_THROWS_AS(cc_acr_wald(tiny), DataError);
}

TEST_CASE("margin weights against a hand oracle") {
  // z~=0: d {0,0,1,2}; z~=1: d {0,1,2,2}.
  auto s = make_sample({0, 0, 0, 0, 1, 1, 1, 1}, std::vector<double>(8, 0.0),
                       {0, 0, 1, 2, 0, 1, 2, 2});
  MarginWeights w = margin_weights(s);
  REQUIRE(w.margins == std::vector<int>{1, 2});
  CHECK(w.raw[0] == doctest::Approx(0.5 - 0.25));
  CHECK(w.raw[1] == doctest::Approx(0.75 - 0.5));
  CHECK(w.lim_consistent);
  REQUIRE(w.normalization_defined);
  CHECK(w.normalized[0] == doctest::Approx(0.5));
  CHECK(w.normalized[1] == doctest::Approx(0.5));
}

TEST_CASE("negative margin weight flips lim_consistent") {
  // Margin 1: P(d<1|0)=0, P(d<1|1)=0.5 -> raw -0.5.
  auto s = make_sample({0, 0, 1, 1}, std::vector<double>(4, 0.0), {1, 2, 0, 2});
  MarginWeights w = margin_weights(s);
  CHECK(w.raw[0] < 0.0);
  CHECK_FALSE(w.lim_consistent);
}

TEST_CASE("margin weights sum to the Wald denominator (property)") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    CollapsedSample s = two_type_dgp(500, 1.0, seed);
    // Integer-code the treatment first (already 0/1 here).
    MarginWeights w = margin_weights(s);
    CcAcrEstimate e = cc_acr_wald(s);
    double sum = 0.0;
    for (double r : w.raw) sum += r;
    CHECK(sum == doctest::Approx(e.denominator).epsilon(1e-12));
  }
}

TEST_CASE("continuous weight curve on a hand case") {
  auto s = make_sample({0, 0, 1, 1}, std::vector<double>(4, 0.0),
                       {0.0, 1.0, 1.0, 2.0});
  WeightCurve c = weight_curve_continuous(s, {0.5, 1.5});
  // P(d>=0.5|1)=1, |0 = 0.5 -> 0.5; P(d>=1.5|1)=0.5, |0 = 0 -> 0.5.
  CHECK(c.raw[0] == doctest::Approx(0.5));
  CHECK(c.raw[1] == doctest::Approx(0.5));
  CHECK(c.integral == doctest::Approx(0.5));
  CHECK(c.normalized[0] == doctest::Approx(1.0));
  CHECK_FALSE(c.violation[0]);
  CHECK_THROWS_AS(weight_curve_continuous(s, {1.0}), DataError);
  CHECK_THROWS_AS(weight_curve_continuous(s, {2.0, 1.0}), DataError);
}

TEST_CASE("K=1 decomposition equals the simple Wald ratio") {
  IvDataset data;
  data.y = {0.5, 1.5, 2.0, 3.0};
  data.d = {0, 1, 1, 2};
  data.z = Matrix(4, 1);
  data.z(2, 0) = 1;
  data.z(3, 0) = 1;
  data.x = Matrix(4, 0);
  data.instrument_names = {"z1"};
  TslsDecomposition dec = tsls_decomposition(data);
  REQUIRE(dec.omega.size() == 1);
  CHECK(dec.omega[0] == doctest::Approx(1.0));
  CHECK(dec.delta[0] == doctest::Approx(1.0));
  CHECK(dec.beta_wald[0] == doctest::Approx(1.5));
  CHECK(dec.beta_tsls == doctest::Approx(1.5));
  CHECK(dec.beta_tsls == doctest::Approx(tsls_saturated(data)).epsilon(1e-12));
}

TEST_CASE("decomposition identities on random data (property)") {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    IvDataset data = random_iv_dataset(2000, 2, seed);
    TslsDecomposition dec = tsls_decomposition(data);
    double mu_sum = 0.0;
    for (std::size_t m = 0; m < dec.mu.size(); ++m) {
      CHECK(dec.mu[m] == doctest::Approx(dec.delta[m] * dec.omega[m]));
      mu_sum += dec.mu[m];
    }
    CHECK(std::abs(mu_sum - 1.0) < 1e-10);
    CHECK(std::abs(dec.beta_tsls - tsls_saturated(data)) < 1e-8);
    // Support sorted ascending in the first-stage mean.
    for (std::size_t m = 1; m < dec.first_stage_means.size(); ++m)
      CHECK(dec.first_stage_means[m] > dec.first_stage_means[m - 1]);
    // Probabilities sum to one.
    double psum = 0.0;
    for (double p : dec.probs) psum += p;
    CHECK(psum == doctest::Approx(1.0));
  }
}

TEST_CASE("KS dominance statistic against a hand case") {
  // z~=1 treatment sits below z~=0: F1 - F0 peaks at 2/3.
  auto s = make_sample({1, 1, 1, 0, 0, 0}, std::vector<double>(6, 0.0),
                       {0, 0, 1, 1, 2, 2});
  DominanceTest t = ks_dominance_test(s, 200, 5);
  CHECK(t.statistic == doctest::Approx(2.0 / 3.0));
  CHECK(t.p_value > 0.0);
  CHECK(t.p_value <= 1.0);
  CHECK_FALSE(t.crossings.empty());

  // No crossing when z~=1 dominates: statistic 0 and p-value 1.
  auto dom = make_sample({0, 0, 0, 1, 1, 1}, std::vector<double>(6, 0.0),
                         {0, 0, 1, 1, 2, 2});
  DominanceTest td = ks_dominance_test(dom, 200, 5);
  CHECK(td.statistic == 0.0);
  CHECK(td.p_value == doctest::Approx(1.0));
}

TEST_CASE("KS test is deterministic and thread-count independent") {
  CollapsedSample s = two_type_dgp(400, 1.0, 99);
  set_num_threads(1);
  DominanceTest a = ks_dominance_test(s, 500, 7);
  DominanceTest b = ks_dominance_test(s, 500, 7);
  set_num_threads(4);
  DominanceTest c = ks_dominance_test(s, 500, 7);
  set_num_threads(0);
  CHECK(a.statistic == b.statistic);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == c.statistic);
  CHECK(a.p_value == c.p_value);
}
