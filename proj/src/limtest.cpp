#include "ccacr/limtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccacr {

std::vector<double> pseudo_outcomes(const std::vector<int>& d, int j) {
  if (j < 1) throw DataError("margin must be >= 1");
  int max_code = 0;
  for (int v : d) max_code = std::max(max_code, v);
  if (j > max_code) throw DataError("margin beyond the treatment support");
  std::vector<double> q(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) q[i] = d[i] < j ? 1.0 : 0.0;
  return q;
}

GammaScores gamma_scores(const CollapsedSample& s,
                         const std::vector<double>& q, int margin,
                         const LimTestConfig& cfg, std::uint64_t seed) {
  const std::size_t n = s.n();
  if (q.size() != n) throw DataError("pseudo-outcome length mismatch");
  GammaScores g;
  g.margin = margin;

  CausalForestModel tau =
      fit_causal_forest(s.x, s.z_tilde, q, cfg.forest, splitmix64(seed) + 1);
  std::vector<double> zt(n);
  for (std::size_t i = 0; i < n; ++i) zt[i] = static_cast<double>(s.z_tilde[i]);
  FittedModel ehat = fit_forest(s.x, zt, cfg.forest, splitmix64(seed) + 2);
  FittedModel muhat = fit_forest(s.x, q, cfg.forest, splitmix64(seed) + 3);

  g.tau_oob.resize(n);
  g.mu_oob.resize(n);
  g.e_oob.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.tau_oob[i] = tau.oob_defined[i] ? tau.tau_oob[i] : tau.predict_tau(s.x, i);
    g.mu_oob[i] =
        muhat.oob_defined[i] ? muhat.oob_predictions[i] : muhat.predict(s.x, i);
    g.e_oob[i] =
        ehat.oob_defined[i] ? ehat.oob_predictions[i] : ehat.predict(s.x, i);
  }
  g.e_oob = trim_propensity(std::move(g.e_oob), cfg.eps);

  g.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = g.e_oob[i];
    const double r = (zt[i] - e) / (e * (1.0 - e));
    g.gamma[i] =
        g.tau_oob[i] + r * (q[i] - g.mu_oob[i] - (zt[i] - e) * g.tau_oob[i]);
  }
  return g;
}

Tree fit_gamma_tree(const Matrix& x, const std::vector<double>& gamma,
                    std::size_t min_leaf, std::size_t folds,
                    std::uint64_t seed) {
  if (gamma.size() < 2 * min_leaf)
    throw DataError("too few rows for the requested min_leaf");
  std::vector<std::size_t> all(gamma.size());
  std::iota(all.begin(), all.end(), 0);
  TreeConfig cfg;
  cfg.min_leaf = min_leaf;
  auto rng = make_rng(seed, 0x67747265);
  Tree full = build_regression_tree(x, gamma, all, cfg, rng);
  return prune_tree_cv(x, gamma, full, min_leaf, folds, splitmix64(seed) + 7);
}

namespace {

CollapsedSample subset_sample(const CollapsedSample& s,
                              const std::vector<std::size_t>& idx) {
  CollapsedSample out;
  out.covariate_names = s.covariate_names;
  out.x = s.x.take_rows(idx);
  for (std::size_t i : idx) {
    out.parent_indices.push_back(s.parent_indices.empty() ? i
                                                          : s.parent_indices[i]);
    out.z_tilde.push_back(s.z_tilde[i]);
    out.y.push_back(s.y[i]);
    out.d.push_back(s.d[i]);
    if (s.z_tilde[i] == 1)
      ++out.n1;
    else
      ++out.n0;
  }
  return out;
}

/// Halve `s` stratified on z~ and the margin indicator q, with a seeded
/// shuffle per stratum.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_halves(
    const CollapsedSample& s, const std::vector<double>& q,
    std::uint64_t seed) {
  std::vector<std::size_t> a, b;
  for (int cell = 0; cell < 4; ++cell) {
    const int arm = cell & 1, qv = cell >> 1;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < s.n(); ++i)
      if (s.z_tilde[i] == arm && static_cast<int>(q[i]) == qv)
        rows.push_back(i);
    auto rng = make_rng(seed, 0x68616c66, static_cast<std::uint64_t>(cell));
    for (std::size_t i = rows.size(); i-- > 1;) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(rows[i], rows[pick(rng)]);
    }
    const std::size_t half = (rows.size() + 1) / 2;
    a.insert(a.end(), rows.begin(), rows.begin() + static_cast<long>(half));
    b.insert(b.end(), rows.begin() + static_cast<long>(half), rows.end());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {a, b};
}

/// Screen leaves on the training half, confirm passers on the holdout half.
HalfSummary test_one_direction(const CollapsedSample& train,
                               const std::vector<double>& gamma_train,
                               const CollapsedSample& hold,
                               const std::vector<double>& gamma_hold,
                               std::size_t min_leaf, const LimTestConfig& cfg,
                               std::uint64_t seed, std::vector<double>& t_vec) {
  HalfSummary out;
  Tree tree =
      fit_gamma_tree(train.x, gamma_train, min_leaf, cfg.prune_folds, seed);
  out.tree_text = tree.render(train.covariate_names);
  out.first_split_feature = tree.first_split_feature();

  const auto leaf_list = tree.leaf_ids();
  // Leaf membership on both halves.
  std::vector<std::vector<double>> g_train(tree.nodes.size()),
      g_hold(tree.nodes.size());
  for (std::size_t i = 0; i < train.n(); ++i)
    g_train[static_cast<std::size_t>(tree.leaf_index(train.x, i))].push_back(
        gamma_train[i]);
  for (std::size_t i = 0; i < hold.n(); ++i)
    g_hold[static_cast<std::size_t>(tree.leaf_index(hold.x, i))].push_back(
        gamma_hold[i]);

  // Count testable leaves first: zero-variance leaves do not enter l_max.
  std::vector<LeafTest> tests;
  for (int l : leaf_list) {
    const auto& g = g_train[static_cast<std::size_t>(l)];
    LeafTest lt;
    lt.leaf_id = l;
    lt.n_leaf = g.size();
    if (g.size() < 2 || variance(g) <= 0.0) {
      ++out.zero_variance_leaves;
      continue;
    }
    lt.mean_gamma = mean(g);
    lt.t_train = lt.mean_gamma /
                 std::sqrt(variance(g) / static_cast<double>(g.size()));
    tests.push_back(lt);
  }
  out.l_max = tests.size();
  if (out.l_max == 0) return out;
  const double screen =
      normal_quantile(1.0 - 0.05 / static_cast<double>(out.l_max));
  for (LeafTest& lt : tests) {
    lt.passed_screen = lt.t_train > screen;
    if (!lt.passed_screen) {
      out.leaves.push_back(lt);
      continue;
    }
    const auto& g = g_hold[static_cast<std::size_t>(lt.leaf_id)];
    if (g.size() < 2 || variance(g) <= 0.0) {
      ++out.skipped_small_leaves;
      out.leaves.push_back(lt);
      continue;
    }
    lt.t_holdout =
        mean(g) / std::sqrt(variance(g) / static_cast<double>(g.size()));
    t_vec.push_back(*lt.t_holdout);
    out.leaves.push_back(lt);
  }
  return out;
}

}  // namespace

MarginResult split_sample_test(const CollapsedSample& s, int margin,
                               const LimTestConfig& cfg, std::uint64_t seed) {
  MarginResult out;
  out.margin = margin;
  // Default leaf size scales with the half actually used for tree fitting.
  std::size_t min_leaf = cfg.min_leaf;
  if (min_leaf == 0)
    min_leaf = std::max<std::size_t>(
        20, static_cast<std::size_t>(
                std::ceil(static_cast<double>(s.n()) / 2.0 / 30.0)));

  std::vector<int> dall(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) dall[i] = static_cast<int>(s.d[i]);
  const auto qall = pseudo_outcomes(dall, margin);
  auto [ia, ib] = stratified_halves(
      s, qall, splitmix64(seed) + static_cast<std::uint64_t>(margin));
  CollapsedSample a = subset_sample(s, ia);
  CollapsedSample b = subset_sample(s, ib);

  std::vector<double> qa, qb;
  for (std::size_t i : ia) qa.push_back(qall[i]);
  for (std::size_t i : ib) qb.push_back(qall[i]);
  const GammaScores ga = gamma_scores(
      a, qa, margin, cfg, make_rng(seed, 0x6761, static_cast<std::uint64_t>(margin), 0)());
  const GammaScores gb = gamma_scores(
      b, qb, margin, cfg, make_rng(seed, 0x6761, static_cast<std::uint64_t>(margin), 1)());

  out.half_a = test_one_direction(a, ga.gamma, b, gb.gamma, min_leaf, cfg,
                                  splitmix64(seed) + 101, out.t_vec);
  out.half_b = test_one_direction(b, gb.gamma, a, ga.gamma, min_leaf, cfg,
                                  splitmix64(seed) + 202, out.t_vec);

  if (!out.t_vec.empty()) {
    out.max_t = *std::max_element(out.t_vec.begin(), out.t_vec.end());
    out.threshold = normal_quantile(
        1.0 - cfg.alpha / static_cast<double>(out.t_vec.size()));
    out.reject = *out.max_t > *out.threshold;
  }
  return out;
}

LimTestReport lim_test(const CollapsedSample& s, const LimTestConfig& cfg,
                       std::uint64_t seed) {
  // Margins run over the integer-coded support 1..J.
  std::vector<int> d(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) {
    d[i] = static_cast<int>(s.d[i]);
    if (static_cast<double>(d[i]) != s.d[i] || d[i] < 0)
      throw DataError("treatment must be integer-coded 0..J");
  }
  const int J = *std::max_element(d.begin(), d.end());
  if (J < 1) throw DataError("treatment is constant");

  LimTestReport rep;
  rep.alpha = cfg.alpha;
  rep.seed = seed;
  rep.min_leaf = cfg.min_leaf != 0
                     ? cfg.min_leaf
                     : std::max<std::size_t>(
                           20, static_cast<std::size_t>(std::ceil(
                                   static_cast<double>(s.n()) / 2.0 / 30.0)));
  for (int j = 1; j <= J; ++j) {
    rep.margins.push_back(split_sample_test(s, j, cfg, seed));
    rep.overall_reject = rep.overall_reject || rep.margins.back().reject;
  }
  return rep;
}

}  // namespace ccacr
