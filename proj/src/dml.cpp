#include "ccacr/dml.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace ccacr {

namespace {

/// Stratified fold ids: permute each z~ group separately and deal rows
/// round-robin so fold sizes differ by at most one per group.
std::vector<int> stratified_folds(const CollapsedSample& s, std::size_t folds,
                                  std::uint64_t seed, std::uint64_t attempt) {
  std::vector<int> fold(s.n(), 0);
  for (int arm : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < s.n(); ++i)
      if (s.z_tilde[i] == arm) rows.push_back(i);
    auto rng = make_rng(seed, 0x666f6c64, attempt, static_cast<std::uint64_t>(arm));
    for (std::size_t i = rows.size(); i-- > 1;) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(rows[i], rows[pick(rng)]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      fold[rows[i]] = static_cast<int>(i % folds);
  }
  return fold;
}

bool folds_ok(const CollapsedSample& s, const std::vector<int>& fold,
              std::size_t folds) {
  std::vector<std::array<std::size_t, 2>> counts(folds, {0, 0});
  for (std::size_t i = 0; i < s.n(); ++i)
    ++counts[static_cast<std::size_t>(fold[i])]
            [static_cast<std::size_t>(s.z_tilde[i])];
  for (const auto& c : counts)
    if (c[0] == 0 || c[1] == 0) return false;
  return true;
}

}  // namespace

NuisanceFits crossfit_nuisances(const CollapsedSample& s, const DmlSpecs& specs,
                                std::size_t folds, double eps,
                                std::uint64_t seed) {
  const std::size_t n = s.n();
  if (folds < 1) throw DataError("folds must be >= 1");
  if (s.n1 == 0 || s.n0 == 0)
    throw DataError("both z~ arms are required for cross-fitting");

  NuisanceFits fits;
  fits.mu1.assign(n, 0.0);
  fits.mu0.assign(n, 0.0);
  fits.m1.assign(n, 0.0);
  fits.m0.assign(n, 0.0);
  fits.p.assign(n, 0.0);

  if (folds == 1) {
    fits.fold_assignment.assign(n, 0);
  } else {
    fits.fold_assignment = stratified_folds(s, folds, seed, 0);
    if (!folds_ok(s, fits.fold_assignment, folds)) {
      fits.fold_assignment = stratified_folds(s, folds, seed, 1);
      if (!folds_ok(s, fits.fold_assignment, folds))
        throw DataError("a cross-fitting fold is missing a z~ value");
    }
  }

  std::vector<double> zt(n);
  for (std::size_t i = 0; i < n; ++i) zt[i] = static_cast<double>(s.z_tilde[i]);

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, hold;
    for (std::size_t i = 0; i < n; ++i) {
      if (folds == 1 || fits.fold_assignment[i] != static_cast<int>(f))
        train.push_back(i);
      if (folds == 1 || fits.fold_assignment[i] == static_cast<int>(f))
        hold.push_back(i);
    }
    std::vector<std::size_t> train1, train0;
    for (std::size_t i : train)
      (s.z_tilde[i] == 1 ? train1 : train0).push_back(i);
    if (train1.empty() || train0.empty())
      throw DataError("a training set is missing a z~ value");

    auto subset = [&](const std::vector<std::size_t>& idx,
                      const std::vector<double>& v) {
      std::vector<double> out;
      out.reserve(idx.size());
      for (std::size_t i : idx) out.push_back(v[i]);
      return out;
    };
    const Matrix x1 = s.x.take_rows(train1);
    const Matrix x0 = s.x.take_rows(train0);
    const Matrix xa = s.x.take_rows(train);

    FittedModel muf1 = fit_learner(x1, subset(train1, s.y), specs.learner_y,
                                   splitmix64(seed) + 11 * folds + f);
    FittedModel muf0 = fit_learner(x0, subset(train0, s.y), specs.learner_y,
                                   splitmix64(seed) + 13 * folds + f);
    FittedModel mf1 = fit_learner(x1, subset(train1, s.d), specs.learner_d,
                                  splitmix64(seed) + 17 * folds + f);
    FittedModel mf0 = fit_learner(x0, subset(train0, s.d), specs.learner_d,
                                  splitmix64(seed) + 19 * folds + f);
    FittedModel pf = fit_learner(xa, subset(train, zt), specs.learner_z,
                                 splitmix64(seed) + 23 * folds + f);
    for (std::size_t i : hold) {
      fits.mu1[i] = muf1.predict(s.x, i);
      fits.mu0[i] = muf0.predict(s.x, i);
      fits.m1[i] = mf1.predict(s.x, i);
      fits.m0[i] = mf0.predict(s.x, i);
      fits.p[i] = pf.predict(s.x, i);
    }
  }

  for (double& v : fits.p) {
    const double raw = v;
    v = std::clamp(v, eps, 1.0 - eps);
    if (v != raw) ++fits.trimmed_count;
  }
  return fits;
}

double orthogonal_score(double y, double d, int z_tilde, std::size_t row,
                        double beta, const NuisanceFits& fits) {
  const double p = fits.p[row];
  const double w = z_tilde == 1 ? 1.0 / p : -1.0 / (1.0 - p);
  const double mu_z = z_tilde == 1 ? fits.mu1[row] : fits.mu0[row];
  const double m_z = z_tilde == 1 ? fits.m1[row] : fits.m0[row];
  const double y_side = fits.mu1[row] - fits.mu0[row] + w * (y - mu_z);
  const double d_side = fits.m1[row] - fits.m0[row] + w * (d - m_z);
  return y_side - d_side * beta;
}

BetaSolution solve_beta(const NuisanceFits& fits, const CollapsedSample& s) {
  const std::size_t n = s.n();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = fits.p[i];
    const double w = s.z_tilde[i] == 1 ? 1.0 / p : -1.0 / (1.0 - p);
    const double mu_z = s.z_tilde[i] == 1 ? fits.mu1[i] : fits.mu0[i];
    const double m_z = s.z_tilde[i] == 1 ? fits.m1[i] : fits.m0[i];
    num += fits.mu1[i] - fits.mu0[i] + w * (s.y[i] - mu_z);
    den += fits.m1[i] - fits.m0[i] + w * (s.d[i] - m_z);
  }
  num /= static_cast<double>(n);
  den /= static_cast<double>(n);
  if (den == 0.0) throw DataError("instrument irrelevant after adjustment");
  return {num / den, num, den};
}

double dml_variance(const NuisanceFits& fits, double beta,
                    const CollapsedSample& s) {
  const std::size_t n = s.n();
  double jac = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = fits.p[i];
    const double w = s.z_tilde[i] == 1 ? 1.0 / p : -1.0 / (1.0 - p);
    const double m_z = s.z_tilde[i] == 1 ? fits.m1[i] : fits.m0[i];
    jac += fits.m1[i] - fits.m0[i] + w * (s.d[i] - m_z);
  }
  jac /= static_cast<double>(n);
  if (jac == 0.0) throw DataError("instrument irrelevant after adjustment");
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double psi =
        orthogonal_score(s.y[i], s.d[i], s.z_tilde[i], i, beta, fits);
    const double phi = -psi / jac;
    v += phi * phi;
  }
  v /= static_cast<double>(n);
  return std::sqrt(v / static_cast<double>(n));
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DmlEstimate dml_estimate(const CollapsedSample& s, const DmlSpecs& specs,
                         std::size_t folds, std::size_t splits, double eps,
                         std::uint64_t seed, double ci_level) {
  if (splits < 1) throw DataError("splits must be >= 1");
  DmlEstimate out;
  out.folds = folds;
  out.n = s.n();
  for (std::size_t split = 0; split < splits; ++split) {
    const std::uint64_t sseed = splitmix64(seed ^ splitmix64(split + 1));
    NuisanceFits fits = crossfit_nuisances(s, specs, folds, eps, sseed);
    out.trimmed_count += fits.trimmed_count;
    const BetaSolution sol = solve_beta(fits, s);
    const double se = dml_variance(fits, sol.beta, s);
    out.per_split_betas.push_back(sol.beta);
    out.per_split_ses.push_back(se);
    for (std::size_t i = 0; i < s.n(); ++i)
      out.max_abs_score = std::max(
          out.max_abs_score,
          std::abs(orthogonal_score(s.y[i], s.d[i], s.z_tilde[i], i, sol.beta,
                                    fits)));
  }
  out.beta = median_of(out.per_split_betas);
  if (splits == 1) {
    out.se = out.per_split_ses[0];
  } else {
    std::vector<double> adj;
    for (std::size_t k = 0; k < splits; ++k) {
      const double dev = out.per_split_betas[k] - out.beta;
      adj.push_back(out.per_split_ses[k] * out.per_split_ses[k] + dev * dev);
    }
    out.se = std::sqrt(median_of(adj));
  }
  const double zc = normal_quantile(0.5 + ci_level / 2.0);
  out.ci_low = out.beta - zc * out.se;
  out.ci_high = out.beta + zc * out.se;
  return out;
}

}  // namespace ccacr
