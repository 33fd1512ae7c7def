#include "ccacr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ccacr {

double Tree::predict_row(const Matrix& x, std::size_t row) const {
  return nodes[static_cast<std::size_t>(leaf_index(x, row))].value;
}

int Tree::leaf_index(const Matrix& x, std::size_t row) const {
  int cur = 0;
  while (nodes[static_cast<std::size_t>(cur)].left >= 0) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(cur)];
    cur = x(row, static_cast<std::size_t>(nd.feature)) <= nd.threshold
              ? nd.left
              : nd.right;
  }
  return cur;
}

std::vector<int> Tree::leaf_ids() const {
  // Traverse from the root: pruning can leave unreachable nodes behind.
  std::vector<int> ids;
  if (nodes.empty()) return ids;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
    if (nd.left < 0) {
      ids.push_back(id);
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string Tree::render(const std::vector<std::string>& feature_names) const {
  std::ostringstream os;
  auto name = [&](int f) {
    if (f >= 0 && static_cast<std::size_t>(f) < feature_names.size())
      return feature_names[static_cast<std::size_t>(f)];
    return "x" + std::to_string(f);
  };
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (nd.left < 0) {
      os << "leaf n=" << nd.n << " value=" << nd.value << "\n";
    } else {
      os << name(nd.feature) << " <= " << nd.threshold << " (n=" << nd.n
         << ")\n";
      stack.emplace_back(nd.right, depth + 1);
      stack.emplace_back(nd.left, depth + 1);
    }
  }
  return os.str();
}

namespace {

std::vector<std::size_t> sample_features(std::size_t p, std::size_t mtry,
                                         std::mt19937_64& rng) {
  std::vector<std::size_t> feats(p);
  std::iota(feats.begin(), feats.end(), 0);
  if (mtry == 0 || mtry >= p) return feats;
  for (std::size_t i = 0; i < mtry; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(feats[i], feats[pick(rng)]);
  }
  feats.resize(mtry);
  return feats;
}

struct RegressionSplitter {
  const Matrix& x;
  const std::vector<double>& y;

  struct NodeStats {
    double value;
    double sse;
  };

  NodeStats stats(const std::vector<std::size_t>& rows) const {
    double s = 0.0, ss = 0.0;
    for (std::size_t i : rows) {
      s += y[i];
      ss += y[i] * y[i];
    }
    const double n = static_cast<double>(rows.size());
    return {s / n, std::max(0.0, ss - s * s / n)};
  }

  bool splittable(const std::vector<std::size_t>& rows, double sse) const {
    return sse > 1e-12;
  }

  /// Best split of `rows` on `feature`. Maximizes sumL^2/nL + sumR^2/nR.
  bool best_split(const std::vector<std::size_t>& rows, std::size_t feature,
                  std::size_t min_leaf, double& best_score,
                  double& best_threshold) const {
    std::vector<std::pair<double, double>> vy;
    vy.reserve(rows.size());
    for (std::size_t i : rows) vy.emplace_back(x(i, feature), y[i]);
    std::sort(vy.begin(), vy.end());
    double total = 0.0;
    for (auto& [v, yy] : vy) total += yy;
    const std::size_t n = vy.size();
    double left = 0.0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left += vy[i].second;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_leaf) continue;
      if (nr < min_leaf) break;
      if (vy[i].first == vy[i + 1].first) continue;
      const double right = total - left;
      const double score = left * left / static_cast<double>(nl) +
                           right * right / static_cast<double>(nr);
      if (!found || score > best_score) {
        best_score = score;
        best_threshold = 0.5 * (vy[i].first + vy[i + 1].first);
        found = true;
      }
    }
    return found;
  }
};

struct CausalSplitter {
  const Matrix& x;
  const std::vector<int>& w;
  const std::vector<double>& y;

  struct NodeStats {
    double value;  // difference in means across w
    double sse;    // unused for splitting decisions; kept at 0
  };

  NodeStats stats(const std::vector<std::size_t>& rows) const {
    double s1 = 0.0, s0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i : rows) {
      if (w[i] == 1) {
        s1 += y[i];
        ++n1;
      } else {
        s0 += y[i];
        ++n0;
      }
    }
    double tau = 0.0;
    if (n1 > 0 && n0 > 0)
      tau = s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
    return {tau, 0.0};
  }

  bool splittable(const std::vector<std::size_t>&, double) const { return true; }

  /// Maximizes nL*tauL^2 + nR*tauR^2; children must keep both w groups.
  bool best_split(const std::vector<std::size_t>& rows, std::size_t feature,
                  std::size_t min_leaf, double& best_score,
                  double& best_threshold) const {
    struct Rec {
      double v, y;
      int w;
    };
    std::vector<Rec> recs;
    recs.reserve(rows.size());
    for (std::size_t i : rows) recs.push_back({x(i, feature), y[i], w[i]});
    std::sort(recs.begin(), recs.end(),
              [](const Rec& a, const Rec& b) { return a.v < b.v; });
    double t1 = 0.0, t0 = 0.0;
    std::size_t c1 = 0, c0 = 0;
    for (const Rec& r : recs) {
      if (r.w == 1) {
        t1 += r.y;
        ++c1;
      } else {
        t0 += r.y;
        ++c0;
      }
    }
    const std::size_t n = recs.size();
    double l1 = 0.0, l0 = 0.0;
    std::size_t k1 = 0, k0 = 0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (recs[i].w == 1) {
        l1 += recs[i].y;
        ++k1;
      } else {
        l0 += recs[i].y;
        ++k0;
      }
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_leaf) continue;
      if (nr < min_leaf) break;
      if (recs[i].v == recs[i + 1].v) continue;
      const std::size_t r1 = c1 - k1, r0 = c0 - k0;
      if (k1 == 0 || k0 == 0 || r1 == 0 || r0 == 0) continue;
      const double tau_l =
          l1 / static_cast<double>(k1) - l0 / static_cast<double>(k0);
      const double tau_r = (t1 - l1) / static_cast<double>(r1) -
                           (t0 - l0) / static_cast<double>(r0);
      const double score = static_cast<double>(nl) * tau_l * tau_l +
                           static_cast<double>(nr) * tau_r * tau_r;
      if (!found || score > best_score) {
        best_score = score;
        best_threshold = 0.5 * (recs[i].v + recs[i + 1].v);
        found = true;
      }
    }
    return found;
  }
};

template <typename Splitter>
Tree build_tree_impl(const Splitter& splitter, const Matrix& x,
                     const std::vector<std::size_t>& rows,
                     const TreeConfig& cfg, std::mt19937_64& rng) {
  Tree tree;
  struct Work {
    std::vector<std::size_t> rows;
    int node_id;
    int depth;
  };
  auto make_node = [&](const std::vector<std::size_t>& r) {
    TreeNode nd;
    auto st = splitter.stats(r);
    nd.value = st.value;
    nd.sse = st.sse;
    nd.n = r.size();
    tree.nodes.push_back(nd);
    return static_cast<int>(tree.nodes.size()) - 1;
  };
  std::vector<Work> stack;
  stack.push_back({rows, make_node(rows), 0});
  while (!stack.empty()) {
    Work wk = std::move(stack.back());
    stack.pop_back();
    const double node_sse = tree.nodes[static_cast<std::size_t>(wk.node_id)].sse;
    if (wk.rows.size() < 2 * cfg.min_leaf) continue;
    if (cfg.max_depth >= 0 && wk.depth >= cfg.max_depth) continue;
    if (!splitter.splittable(wk.rows, node_sse)) continue;
    const auto feats = sample_features(x.cols(), cfg.mtry, rng);
    double best_score = 0.0, best_threshold = 0.0;
    int best_feature = -1;
    for (std::size_t f : feats) {
      double score, threshold;
      const bool ok =
          splitter.best_split(wk.rows, f, cfg.min_leaf, score, threshold);
      if (ok && (best_feature < 0 || score > best_score)) {
        best_score = score;
        best_threshold = threshold;
        best_feature = static_cast<int>(f);
      }
    }
    if (best_feature < 0) continue;
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t i : wk.rows) {
      if (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold)
        left_rows.push_back(i);
      else
        right_rows.push_back(i);
    }
    const int li = make_node(left_rows);
    const int ri = make_node(right_rows);
    // make_node may reallocate; re-reference the parent
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(wk.node_id)];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = li;
    parent.right = ri;
    stack.push_back({std::move(right_rows), ri, wk.depth + 1});
    stack.push_back({std::move(left_rows), li, wk.depth + 1});
  }
  return tree;
}

// ---- cost-complexity machinery -------------------------------------------

struct SubtreeInfo {
  double sse;          // SSE of the subtree's leaves
  std::size_t leaves;  // leaf count
};

void subtree_info(const Tree& t, int id, std::vector<SubtreeInfo>& info) {
  const TreeNode& nd = t.nodes[static_cast<std::size_t>(id)];
  if (nd.left < 0) {
    info[static_cast<std::size_t>(id)] = {nd.sse, 1};
    return;
  }
  subtree_info(t, nd.left, info);
  subtree_info(t, nd.right, info);
  const auto& l = info[static_cast<std::size_t>(nd.left)];
  const auto& r = info[static_cast<std::size_t>(nd.right)];
  info[static_cast<std::size_t>(id)] = {l.sse + r.sse, l.leaves + r.leaves};
}

/// Weakest link: internal node with the smallest per-leaf SSE increase when
/// collapsed. Returns (node id, g value), or (-1, inf) for a leaf-only tree.
std::pair<int, double> weakest_link(const Tree& t) {
  std::vector<SubtreeInfo> info(t.nodes.size());
  subtree_info(t, 0, info);
  // Only reachable internal nodes: pruning leaves orphans in the vector.
  std::vector<int> reachable{0};
  int best = -1;
  double best_g = std::numeric_limits<double>::infinity();
  while (!reachable.empty()) {
    const int id = reachable.back();
    reachable.pop_back();
    const TreeNode& nd = t.nodes[static_cast<std::size_t>(id)];
    if (nd.left < 0) continue;
    reachable.push_back(nd.left);
    reachable.push_back(nd.right);
    const auto& inf = info[static_cast<std::size_t>(id)];
    const double g =
        (nd.sse - inf.sse) / static_cast<double>(inf.leaves - 1);
    if (g < best_g) {
      best_g = g;
      best = id;
    }
  }
  return {best, best_g};
}

void collapse(Tree& t, int id) {
  // Mark the subtree unreachable by cutting the links; node ids stay valid.
  t.nodes[static_cast<std::size_t>(id)].left = -1;
  t.nodes[static_cast<std::size_t>(id)].right = -1;
  t.nodes[static_cast<std::size_t>(id)].feature = -1;
}

}  // namespace

Tree build_regression_tree(const Matrix& x, const std::vector<double>& y,
                           const std::vector<std::size_t>& rows,
                           const TreeConfig& cfg, std::mt19937_64& rng) {
  if (rows.empty()) throw DataError("cannot build a tree on zero rows");
  RegressionSplitter sp{x, y};
  return build_tree_impl(sp, x, rows, cfg, rng);
}

Tree build_causal_tree(const Matrix& x, const std::vector<int>& w,
                       const std::vector<double>& y,
                       const std::vector<std::size_t>& rows,
                       const TreeConfig& cfg, std::mt19937_64& rng) {
  if (rows.empty()) throw DataError("cannot build a tree on zero rows");
  bool has1 = false, has0 = false;
  for (std::size_t i : rows) (w[i] == 1 ? has1 : has0) = true;
  if (!has1 || !has0)
    throw DataError("causal tree requires both treatment groups at the root");
  CausalSplitter sp{x, w, y};
  return build_tree_impl(sp, x, rows, cfg, rng);
}

Tree prune_to_alpha(const Tree& tree, double alpha) {
  Tree t = tree;
  while (true) {
    auto [id, g] = weakest_link(t);
    if (id < 0 || g > alpha) break;
    collapse(t, id);
  }
  return t;
}

Tree prune_tree_cv(const Matrix& x, const std::vector<double>& y,
                   const Tree& full, std::size_t min_leaf, std::size_t folds,
                   std::uint64_t seed) {
  if (full.n_leaves() <= 1) return full;
  // Alpha sequence from weakest-link pruning of the full tree.
  std::vector<double> alphas{0.0};
  {
    Tree t = full;
    while (true) {
      auto [id, g] = weakest_link(t);
      if (id < 0) break;
      alphas.push_back(std::max(g, 0.0));
      collapse(t, id);
    }
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  // Geometric midpoints are stable selection points between thresholds.
  std::vector<double> candidates{0.0};
  for (std::size_t i = 1; i + 1 < alphas.size(); ++i)
    candidates.push_back(std::sqrt(std::max(alphas[i], 1e-12) *
                                   std::max(alphas[i + 1], 1e-12)));
  candidates.push_back(alphas.back() * 2.0 + 1e-9);

  const std::size_t n = y.size();
  folds = std::min(folds, n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(seed, 0x70727565);
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  Matrix cv_err(folds, candidates.size());
  TreeConfig cfg;
  cfg.min_leaf = min_leaf;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, val;
    for (std::size_t i = 0; i < n; ++i)
      (i % folds == f ? val : train).push_back(perm[i]);
    if (train.empty() || val.empty()) continue;
    auto fold_rng = make_rng(seed, f, 0x666f6c64);
    Tree ft = build_regression_tree(x, y, train, cfg, fold_rng);
    for (std::size_t a = 0; a < candidates.size(); ++a) {
      Tree pt = prune_to_alpha(ft, candidates[a]);
      double sse = 0.0;
      for (std::size_t i : val) {
        const double e = y[i] - pt.predict_row(x, i);
        sse += e * e;
      }
      cv_err(f, a) = sse / static_cast<double>(val.size());
    }
  }
  // Mean CV error per candidate.
  std::vector<double> mean_err(candidates.size());
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    std::vector<double> col(cv_err.col(a).begin(), cv_err.col(a).end());
    mean_err[a] = mean(col);
  }
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(mean_err.begin(), mean_err.end()) -
                               mean_err.begin());
  // One-SE rule with the paired SE: candidate errors share the same folds,
  // so the comparison uses the SE of the per-fold difference to the best
  // candidate rather than the (much larger) marginal SE.
  std::size_t chosen = best;
  for (std::size_t a = candidates.size(); a-- > 0;) {
    std::vector<double> diff(folds);
    for (std::size_t f = 0; f < folds; ++f) diff[f] = cv_err(f, a) - cv_err(f, best);
    const double se = std::sqrt(variance(diff) / static_cast<double>(folds));
    if (mean_err[a] <= mean_err[best] + se) {
      chosen = a;  // largest alpha within one SE: smallest tree
      break;
    }
  }
  return prune_to_alpha(full, candidates[chosen]);
}

}  // namespace ccacr
