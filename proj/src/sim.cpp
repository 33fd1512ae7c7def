#include "ccacr/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ccacr {

void TypeShareSpec::validate() const {
  if (entries.empty()) throw DataError("no type shares given");
  double sum = 0.0;
  for (const auto& e : entries) {
    if (e.share < 0.0) throw DataError("negative type share");
    sum += e.share;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw DataError("type shares must sum to 1");
}

void ScenarioConfig::validate() const {
  if (n < 1) throw DataError("scenario needs n >= 1");
  if (p_ztilde < 0.0 || p_ztilde > 1.0)
    throw DataError("p_ztilde must lie in [0,1]");
  if (levels.size() < 2) throw DataError("need at least two treatment levels");
  if (covariates.names.size() != covariates.probs.size())
    throw DataError("covariate names/probs length mismatch");
  if (covariates.correlation < 0.0 || covariates.correlation >= 1.0)
    throw DataError("correlation must lie in [0,1)");
  shares.validate();
  const int J = static_cast<int>(levels.size()) - 1;
  for (const auto& e : shares.entries) {
    if (e.type.d00 < 0 || e.type.d00 > J || e.type.d11 < 0 || e.type.d11 > J)
      throw DataError("type share outside the level support");
    if (e.condition_covariate) {
      const auto& nm = covariates.names;
      auto it = std::find(nm.begin(), nm.end(), *e.condition_covariate);
      if (it == nm.end())
        throw DataError("unknown conditioning covariate: " +
                        *e.condition_covariate);
      const double p =
          covariates.probs[static_cast<std::size_t>(it - nm.begin())];
      if (e.share > p + 1e-12)
        throw DataError("conditioned share " + e.type.label() +
                        " exceeds its stratum probability");
    }
  }
}

std::vector<ScenarioConfig> builtin_scenarios() {
  auto cc = [](int a, int b, double s) {
    TypeShareEntry e;
    e.type = {a, b, CombinedKind::Complier};
    e.share = s;
    return e;
  };
  auto cn = [](int a, double s) {
    TypeShareEntry e;
    e.type = {a, a, CombinedKind::NonResponder};
    e.share = s;
    return e;
  };

  ScenarioConfig valid;
  valid.name = "lim-valid";
  valid.shares.entries = {cc(0, 1, 0.15), cc(1, 2, 0.10), cc(0, 2, 0.05),
                          cn(0, 0.25),    cn(1, 0.20),    cn(2, 0.25)};

  ScenarioConfig violated;
  violated.name = "lim-violated";
  TypeShareEntry cd;
  cd.type = {1, 0, CombinedKind::Defier};
  cd.share = 0.10;
  cd.condition_covariate = "south";
  violated.shares.entries = {cc(0, 1, 0.05), cc(1, 2, 0.10), cc(0, 2, 0.05),
                             cn(0, 0.25),    cn(1, 0.20),    cn(2, 0.25),
                             cd};
  return {valid, violated};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  for (auto& s : builtin_scenarios())
    if (s.name == name) return s;
  throw DataError("unknown scenario: " + name);
}

CollapsedSample generate_scenario(const ScenarioConfig& config,
                                  std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.n;
  const std::size_t p = config.covariates.names.size();
  const double rho = config.covariates.correlation;

  CollapsedSample s;
  s.covariate_names = config.covariates.names;
  s.x = Matrix(n, p);
  s.z_tilde.resize(n);
  s.d.resize(n);
  s.y.assign(n, 0.0);
  s.parent_indices.resize(n);
  std::iota(s.parent_indices.begin(), s.parent_indices.end(), 0);

  std::vector<double> thresholds(p);
  for (std::size_t j = 0; j < p; ++j)
    thresholds[j] = normal_quantile(1.0 - config.covariates.probs[j]);

  // Per-stratum type probabilities: a conditioned entry takes mass
  // share / P(stratum) inside its stratum; the unconditioned entries are
  // rescaled within each stratum so the stratum totals are 1.
  struct StratumDist {
    std::vector<double> cum;  // cumulative over shares.entries order
  };
  auto stratum_dist = [&](auto in_stratum) {
    StratumDist d;
    double uncond = 0.0, cond = 0.0;
    for (const auto& e : config.shares.entries) {
      if (!e.condition_covariate) {
        uncond += e.share;
        continue;
      }
      const auto& nm = config.covariates.names;
      const auto jx = static_cast<std::size_t>(
          std::find(nm.begin(), nm.end(), *e.condition_covariate) - nm.begin());
      if (in_stratum(jx))
        cond += e.share / config.covariates.probs[jx];
    }
    const double scale = uncond > 0.0 ? (1.0 - cond) / uncond : 0.0;
    if (scale < -1e-12)
      throw DataError("conditioned shares exceed their stratum mass");
    double acc = 0.0;
    for (const auto& e : config.shares.entries) {
      double pr = 0.0;
      if (!e.condition_covariate) {
        pr = e.share * scale;
      } else {
        const auto& nm = config.covariates.names;
        const auto jx = static_cast<std::size_t>(
            std::find(nm.begin(), nm.end(), *e.condition_covariate) -
            nm.begin());
        if (in_stratum(jx)) pr = e.share / config.covariates.probs[jx];
      }
      acc += pr;
      d.cum.push_back(acc);
    }
    return d;
  };

  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, i, 0x73696d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // Equicorrelated Gaussian: common factor + idiosyncratic part.
    const double f = gauss(rng);
    std::vector<int> xb(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double latent =
          std::sqrt(rho) * f + std::sqrt(1.0 - rho) * gauss(rng);
      xb[j] = latent > thresholds[j] ? 1 : 0;
      s.x(i, j) = xb[j];
    }
    const int zt = unif(rng) < config.p_ztilde ? 1 : 0;
    s.z_tilde[i] = zt;
    if (zt == 1)
      ++s.n1;
    else
      ++s.n0;

    StratumDist dist = stratum_dist(
        [&](std::size_t jx) { return xb[jx] == 1; });
    const double u = unif(rng);
    std::size_t pick = dist.cum.size() - 1;
    for (std::size_t e = 0; e < dist.cum.size(); ++e)
      if (u < dist.cum[e]) {
        pick = e;
        break;
      }
    const auto& t = config.shares.entries[pick].type;
    s.d[i] = static_cast<double>(zt == 1 ? t.d11 : t.d00);
  }
  return s;
}

std::vector<double> population_margin_weights(const TypeShareSpec& shares,
                                              int J) {
  shares.validate();
  std::vector<double> raw;
  for (int j = 1; j <= J; ++j) {
    double w = 0.0;
    for (const auto& e : shares.entries)
      w += e.share * ((e.type.d00 < j ? 1.0 : 0.0) -
                      (e.type.d11 < j ? 1.0 : 0.0));
    raw.push_back(w);
  }
  return raw;
}

namespace {

/// First-split feature of the tree whose confirmatory leaf achieved the
/// margin's max statistic; -1 when unavailable.
int winning_first_split(const MarginResult& m) {
  if (!m.max_t) return -1;
  for (const HalfSummary* h : {&m.half_a, &m.half_b})
    for (const LeafTest& lt : h->leaves)
      if (lt.t_holdout && *lt.t_holdout == *m.max_t)
        return h->first_split_feature;
  return -1;
}

}  // namespace

McReport run_monte_carlo(const ScenarioConfig& config, std::size_t reps,
                         const LimTestConfig& test, std::uint64_t seed) {
  config.validate();
  if (reps < 1) throw DataError("reps must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const int J = static_cast<int>(config.levels.size()) - 1;
  const std::size_t p = config.covariates.names.size();

  McReport rep;
  rep.reps = reps;
  rep.config = config;
  for (int j = 1; j <= J; ++j) rep.margins.push_back(j);
  rep.reject_counts.assign(static_cast<std::size_t>(J), 0);
  rep.first_split_counts.assign(static_cast<std::size_t>(J),
                                std::vector<std::size_t>(p, 0));

  std::vector<LimTestReport> results(reps);
  std::vector<char> failed(reps, 0);
  const long R = static_cast<long>(reps);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (long r = 0; r < R; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    try {
      CollapsedSample s =
          generate_scenario(config, splitmix64(seed) + 1000003ULL * ur);
      results[ur] = lim_test(s, test, splitmix64(seed ^ (ur + 17)));
    } catch (const std::exception&) {
      failed[ur] = 1;
    }
  }

  for (std::size_t r = 0; r < reps; ++r) {
    if (failed[r]) {
      ++rep.failed_reps;
      continue;
    }
    for (std::size_t m = 0; m < results[r].margins.size() &&
                            m < static_cast<std::size_t>(J);
         ++m) {
      const MarginResult& mr = results[r].margins[m];
      if (!mr.reject) continue;
      ++rep.reject_counts[m];
      const int fs = winning_first_split(mr);
      if (fs >= 0 && static_cast<std::size_t>(fs) < p)
        ++rep.first_split_counts[m][static_cast<std::size_t>(fs)];
    }
  }
  const std::size_t ok = reps - rep.failed_reps;
  for (int j = 0; j < J; ++j)
    rep.reject_rates.push_back(
        ok == 0 ? 0.0
                : static_cast<double>(rep.reject_counts[static_cast<std::size_t>(j)]) /
                      static_cast<double>(ok));
  rep.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

CollapsedSample generate_linear_dgp(std::size_t n, double beta,
                                    std::uint64_t seed) {
  CollapsedSample s;
  s.covariate_names = {"south", "x2", "x3", "x4"};
  const std::size_t p = s.covariate_names.size();
  s.x = Matrix(n, p);
  s.z_tilde.resize(n);
  s.d.resize(n);
  s.y.resize(n);
  s.parent_indices.resize(n);
  std::iota(s.parent_indices.begin(), s.parent_indices.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, i, 0x6c696e);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t j = 0; j < p; ++j)
      s.x(i, j) = unif(rng) < 0.5 ? 1.0 : 0.0;
    const int zt = unif(rng) < 0.5 ? 1 : 0;
    s.z_tilde[i] = zt;
    if (zt == 1)
      ++s.n1;
    else
      ++s.n0;
    const double base = s.x(i, 0) + s.x(i, 1);  // always-taken level
    const int complier = unif(rng) < 0.6 ? 1 : 0;
    const double d = base + static_cast<double>(complier * zt);
    const double gx = 0.5 * s.x(i, 2) - 0.5 * s.x(i, 3);
    s.d[i] = d;
    s.y[i] = beta * d + gx + gauss(rng);
  }
  return s;
}

}  // namespace ccacr
