#ifndef CCACR_TESTS_HELPERS_HPP_
#define CCACR_TESTS_HELPERS_HPP_

#include <initializer_list>
#include <random>
#include <vector>

#include "ccacr/common.hpp"
#include "ccacr/dataset.hpp"

namespace ccacr::testing {

inline Matrix matrix_from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// Two-type DGP on the outer support: a share `pc` of units are compliers
/// cc_{0,1} with unit effect `effect`, the rest never-takers cn_{0,0}.
/// True CC-ACR equals `effect`.
inline CollapsedSample two_type_dgp(std::size_t n, double effect,
                                    std::uint64_t seed, double pc = 0.4) {
  CollapsedSample s;
  s.covariate_names = {"x1"};
  s.x = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, i);
    std::bernoulli_distribution half(0.5), comp(pc);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int z = half(rng) ? 1 : 0;
    const int c = comp(rng) ? 1 : 0;
    const double d = c && z ? 1.0 : 0.0;
    s.z_tilde.push_back(z);
    s.d.push_back(d);
    s.y.push_back(effect * d + noise(rng));
    s.x(i, 0) = noise(rng);
    s.parent_indices.push_back(i);
    if (z) ++s.n1; else ++s.n0;
  }
  return s;
}

/// Random multi-instrument dataset with a constant-effect structural model,
/// for decomposition identity checks.
inline IvDataset random_iv_dataset(std::size_t n, int K, std::uint64_t seed) {
  IvDataset data;
  data.z = Matrix(n, static_cast<std::size_t>(K));
  data.x = Matrix(n, 1);
  for (int k = 0; k < K; ++k)
    data.instrument_names.push_back("z" + std::to_string(k + 1));
  data.covariate_names = {"x1"};
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, i, 0x697664);
    std::bernoulli_distribution half(0.5);
    std::normal_distribution<double> noise(0.0, 1.0);
    double zsum = 0.0;
    for (int k = 0; k < K; ++k) {
      const double zv = half(rng) ? 1.0 : 0.0;
      data.z(i, static_cast<std::size_t>(k)) = zv;
      zsum += zv;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Treatment rises stochastically in the number of active instruments.
    double d = 0.0;
    const double p1 = 0.2 + 0.2 * zsum, p2 = 0.1 + 0.15 * zsum;
    if (u(rng) < p1) d += 1.0;
    if (u(rng) < p2) d += 1.0;
    data.d.push_back(d);
    data.y.push_back(1.5 * d + noise(rng));
    data.x(i, 0) = noise(rng);
  }
  return data;
}

}  // namespace ccacr::testing

#endif  // CCACR_TESTS_HELPERS_HPP_
