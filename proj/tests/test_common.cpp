#include <algorithm>
#include <cmath>
#include <vector>

#include "ccacr/common.hpp"
#include "doctest.h"

using namespace ccacr;

TEST_CASE("mean/variance/covariance against hand values") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  std::vector<double> b{2.0, 4.0, 6.0, 8.0};
  CHECK(mean(a) == doctest::Approx(2.5));
  CHECK(variance(a) == doctest::Approx(5.0 / 3.0));
  CHECK(covariance(a, b) == doctest::Approx(10.0 / 3.0));
  CHECK(variance(std::vector<double>{7.0}) == 0.0);
}

TEST_CASE("type-7 quantile matches the interpolation definition") {
  std::vector<double> v{10.0, 20.0, 30.0, 40.0};
  CHECK(quantile_type7(v, 0.0) == doctest::Approx(10.0));
  CHECK(quantile_type7(v, 1.0) == doctest::Approx(40.0));
  // h = (n-1)p = 1.5 -> 20 + 0.5*(30-20)
  CHECK(quantile_type7(v, 0.5) == doctest::Approx(25.0));
  CHECK(quantile_type7(v, 0.25) == doctest::Approx(17.5));
}

TEST_CASE("normal quantile inverts the CDF") {
  for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
}

TEST_CASE("make_rng streams differ by key and repeat by key") {
  auto r1 = make_rng(7, 1, 2, 3);
  auto r2 = make_rng(7, 1, 2, 3);
  auto r3 = make_rng(7, 1, 2, 4);
  CHECK(r1() == r2());
  CHECK(make_rng(7, 1, 2, 3)() != r3());
  CHECK(make_rng(1)() != make_rng(2)());
}

TEST_CASE("matrix take_rows and column spans") {
  Matrix m(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) m(i, j) = 10.0 * (double)i + (double)j;
  Matrix sub = m.take_rows({2, 0});
  CHECK(sub.rows() == 2);
  CHECK(sub(0, 1) == 21.0);
  CHECK(sub(1, 0) == 0.0);
  auto c1 = m.col(1);
  CHECK(c1[2] == 21.0);
}

TEST_CASE("thread setting round-trips and reports at least one worker") {
  set_num_threads(3);
  CHECK(num_threads() == 3);
  set_num_threads(0);
  CHECK(num_threads() >= 1);
}
