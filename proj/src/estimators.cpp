#include "ccacr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ccacr {

namespace {

struct GroupSplit {
  std::vector<double> y1, y0, d1, d0;
};

GroupSplit split_groups(const CollapsedSample& s) {
  GroupSplit g;
  for (std::size_t i = 0; i < s.n(); ++i) {
    if (s.z_tilde[i] == 1) {
      g.y1.push_back(s.y[i]);
      g.d1.push_back(s.d[i]);
    } else {
      g.y0.push_back(s.y[i]);
      g.d0.push_back(s.d[i]);
    }
  }
  return g;
}

}  // namespace

CcAcrEstimate cc_acr_wald(const CollapsedSample& s, double ci_level) {
  if (s.n1 < 2 || s.n0 < 2)
    throw DataError("cc_acr_wald requires at least 2 observations per z~ group");
  GroupSplit g = split_groups(s);
  const double n1 = static_cast<double>(g.y1.size());
  const double n0 = static_cast<double>(g.y0.size());
  CcAcrEstimate e;
  e.n1 = g.y1.size();
  e.n0 = g.y0.size();
  e.numerator = mean(g.y1) - mean(g.y0);
  e.denominator = mean(g.d1) - mean(g.d0);
  if (e.denominator == 0.0)
    throw DataError("instrument irrelevant on outer support (zero denominator)");
  e.beta = e.numerator / e.denominator;
  e.orientation = e.denominator > 0.0 ? 1 : -1;
  // Delta method for the ratio of mean differences, independent groups.
  const double var_num = variance(g.y1) / n1 + variance(g.y0) / n0;
  const double var_den = variance(g.d1) / n1 + variance(g.d0) / n0;
  const double cov_nd =
      covariance(g.y1, g.d1) / n1 + covariance(g.y0, g.d0) / n0;
  const double b = e.beta;
  double v = (var_num - 2.0 * b * cov_nd + b * b * var_den) /
             (e.denominator * e.denominator);
  e.se = std::sqrt(std::max(0.0, v));
  const double q = normal_quantile(0.5 + ci_level / 2.0);
  e.ci_low = e.beta - q * e.se;
  e.ci_high = e.beta + q * e.se;
  return e;
}

MarginWeights margin_weights(const CollapsedSample& s, double tol) {
  if (s.n1 == 0 || s.n0 == 0) throw DataError("both z~ groups must be non-empty");
  int J = 0;
  for (double v : s.d) {
    if (v < 0.0 || v != std::floor(v))
      throw DataError("margin_weights requires integer-coded treatment 0..J");
    J = std::max(J, static_cast<int>(v));
  }
  if (J == 0) throw DataError("treatment has a single level (J = 0)");
  GroupSplit g = split_groups(s);
  MarginWeights w;
  double sum = 0.0;
  for (int j = 1; j <= J; ++j) {
    auto p_less = [&](const std::vector<double>& d) {
      std::size_t c = 0;
      for (double v : d)
        if (v < j) ++c;
      return static_cast<double>(c) / static_cast<double>(d.size());
    };
    const double raw = p_less(g.d0) - p_less(g.d1);
    w.margins.push_back(j);
    w.raw.push_back(raw);
    sum += raw;
    if (raw < -tol) w.lim_consistent = false;
  }
  if (sum > 0.0) {
    w.normalization_defined = true;
    for (double r : w.raw) w.normalized.push_back(r / sum);
  }
  return w;
}

WeightCurve weight_curve_continuous(const CollapsedSample& s,
                                    const std::vector<double>& grid) {
  if (grid.size() < 2) throw DataError("grid needs at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw DataError("grid must be sorted ascending");
  GroupSplit g = split_groups(s);
  if (g.d1.empty() || g.d0.empty())
    throw DataError("both z~ groups must be non-empty");
  WeightCurve c;
  c.grid = grid;
  auto p_geq = [](const std::vector<double>& d, double t) {
    std::size_t n = 0;
    for (double v : d)
      if (v >= t) ++n;
    return static_cast<double>(n) / static_cast<double>(d.size());
  };
  for (double t : grid) {
    const double raw = p_geq(g.d1, t) - p_geq(g.d0, t);
    c.raw.push_back(raw);
    c.violation.push_back(raw < 0.0);
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    c.integral += 0.5 * (c.raw[i] + c.raw[i - 1]) * (grid[i] - grid[i - 1]);
  if (c.integral != 0.0)
    for (double r : c.raw) c.normalized.push_back(r / c.integral);
  return c;
}

TslsDecomposition tsls_decomposition(const IvDataset& data) {
  const std::size_t n = data.n();
  const std::size_t K = data.n_instruments();
  // Group rows by realized assignment (lexicographic map key).
  std::map<std::vector<int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> a(K);
    for (std::size_t k = 0; k < K; ++k) a[k] = static_cast<int>(data.z(i, k));
    groups[a].push_back(i);
  }
  struct Cell {
    std::vector<int> assignment;
    double mean_d, mean_y, prob;
  };
  std::vector<Cell> cells;
  for (const auto& [a, idx] : groups) {
    Cell c;
    c.assignment = a;
    double sd = 0.0, sy = 0.0;
    for (std::size_t i : idx) {
      sd += data.d[i];
      sy += data.y[i];
    }
    c.mean_d = sd / static_cast<double>(idx.size());
    c.mean_y = sy / static_cast<double>(idx.size());
    c.prob = static_cast<double>(idx.size()) / static_cast<double>(n);
    cells.push_back(std::move(c));
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.mean_d != b.mean_d) return a.mean_d < b.mean_d;
    return a.assignment < b.assignment;
  });
  // Merge cells with identical first-stage means: omega is a function of
  // the first-stage mean only.
  TslsDecomposition out;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    double prob = 0.0, wy = 0.0;
    std::vector<std::vector<int>> members;
    while (j < cells.size() && cells[j].mean_d == cells[i].mean_d) {
      prob += cells[j].prob;
      wy += cells[j].prob * cells[j].mean_y;
      members.push_back(cells[j].assignment);
      ++j;
    }
    out.support_assignments.push_back(std::move(members));
    out.first_stage_means.push_back(cells[i].mean_d);
    out.outcome_means.push_back(wy / prob);
    out.probs.push_back(prob);
    i = j;
  }
  const std::size_t M = out.first_stage_means.size();
  if (M < 2)
    throw DataError("first-stage means all equal: decomposition undefined");

  const double ed_bar =
      std::inner_product(out.probs.begin(), out.probs.end(),
                         out.first_stage_means.begin(), 0.0);
  double denom = 0.0;
  for (std::size_t m = 0; m < M; ++m)
    denom += out.probs[m] * out.first_stage_means[m] *
             (out.first_stage_means[m] - ed_bar);
  if (denom == 0.0) throw DataError("degenerate omega denominator");
  // tail[m] = sum_{l>=m} p_l (Ed_l - Ed)
  std::vector<double> tail(M + 1, 0.0);
  for (std::size_t m = M; m-- > 0;)
    tail[m] = tail[m + 1] +
              out.probs[m] * (out.first_stage_means[m] - ed_bar);
  for (std::size_t m = 1; m < M; ++m) {
    const double delta = out.first_stage_means[m] - out.first_stage_means[m - 1];
    if (delta == 0.0)
      throw DataError("pairwise Wald denominator zero between support points " +
                      std::to_string(m - 1) + " and " + std::to_string(m));
    const double omega = tail[m] / denom;
    const double bw =
        (out.outcome_means[m] - out.outcome_means[m - 1]) / delta;
    out.omega.push_back(omega);
    out.delta.push_back(delta);
    out.beta_wald.push_back(bw);
    out.mu.push_back(delta * omega);
    out.beta_tsls += delta * omega * bw;
  }
  return out;
}

double tsls_saturated(const IvDataset& data) {
  const std::size_t n = data.n();
  const std::size_t K = data.n_instruments();
  std::map<std::vector<int>, std::pair<double, std::size_t>> sums;
  std::vector<std::vector<int>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> a(K);
    for (std::size_t k = 0; k < K; ++k) a[k] = static_cast<int>(data.z(i, k));
    auto& [s, c] = sums[a];
    s += data.d[i];
    ++c;
    keys[i] = std::move(a);
  }
  std::vector<double> dhat(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [s, c] = sums[keys[i]];
    dhat[i] = s / static_cast<double>(c);
  }
  const double mh = mean(dhat);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (dhat[i] - mh) * data.y[i];
    den += (dhat[i] - mh) * data.d[i];
  }
  bool constant = true;
  for (double v : dhat)
    if (v != dhat[0]) {
      constant = false;
      break;
    }
  if (constant) throw DataError("fitted first stage constant");
  if (den == 0.0) throw DataError("degenerate first stage");
  return num / den;
}

namespace {

/// One-sided KS statistic sup_t max(0, F1(t) - F0(t)) over the pooled
/// support, given values pre-sorted by d and 0/1 labels in that order.
double dominance_statistic(const std::vector<double>& sorted_d,
                           const std::vector<int>& labels_sorted,
                           std::size_t n1, std::size_t n0,
                           std::vector<double>* crossings = nullptr) {
  double f1 = 0.0, f0 = 0.0, stat = 0.0;
  const double inv1 = 1.0 / static_cast<double>(n1);
  const double inv0 = 1.0 / static_cast<double>(n0);
  const std::size_t n = sorted_d.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (labels_sorted[i] == 1)
      f1 += inv1;
    else
      f0 += inv0;
    const bool boundary = (i + 1 == n) || (sorted_d[i + 1] != sorted_d[i]);
    if (boundary) {
      const double diff = f1 - f0;
      if (diff > stat) stat = diff;
      if (crossings && diff > 1e-12) crossings->push_back(sorted_d[i]);
    }
  }
  return stat;
}

}  // namespace

DominanceTest ks_dominance_test(const CollapsedSample& s, std::size_t resamples,
                                std::uint64_t seed) {
  if (s.n1 == 0 || s.n0 == 0) throw DataError("both z~ groups must be non-empty");
  if (resamples < 1) throw DataError("resamples must be >= 1");
  const std::size_t n = s.n();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.d[a] < s.d[b]; });
  std::vector<double> sorted_d(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_d[i] = s.d[order[i]];
    labels[i] = s.z_tilde[order[i]];
  }
  DominanceTest t;
  t.resamples = resamples;
  t.seed = seed;
  t.statistic = dominance_statistic(sorted_d, labels, s.n1, s.n0, &t.crossings);

  // Permutation of z~ labels; per-resample RNG streams keep the result
  // independent of the thread count.
  std::size_t exceed = 0;
  const long R = static_cast<long>(resamples);
#pragma omp parallel for reduction(+ : exceed) schedule(static) \
    num_threads(num_threads())
  for (long r = 0; r < R; ++r) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(r), 0x6b73);
    std::vector<int> perm(labels);
    for (std::size_t i = n; i-- > 1;) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    const double stat = dominance_statistic(sorted_d, perm, s.n1, s.n0);
    if (stat >= t.statistic) ++exceed;
  }
  t.p_value = (1.0 + static_cast<double>(exceed)) /
              (static_cast<double>(resamples) + 1.0);
  return t;
}

}  // namespace ccacr
