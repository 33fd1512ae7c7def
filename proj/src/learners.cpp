#include "ccacr/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ccacr {

// ---- specs ----------------------------------------------------------------

LearnerSpec LearnerSpec::mean() {
  LearnerSpec s;
  s.kind = Kind::Mean;
  return s;
}

LearnerSpec LearnerSpec::make_lasso(int interaction_order) {
  LearnerSpec s;
  s.kind = Kind::Lasso;
  s.lasso.interaction_order = interaction_order;
  return s;
}

LearnerSpec LearnerSpec::make_forest(std::size_t n_trees, std::size_t min_leaf,
                                     std::size_t mtry) {
  LearnerSpec s;
  s.kind = Kind::Forest;
  s.forest.n_trees = n_trees;
  s.forest.min_leaf = min_leaf;
  s.forest.mtry = mtry;
  return s;
}

LearnerSpec LearnerSpec::make_boost(std::size_t n_trees, int depth,
                                    double shrinkage) {
  LearnerSpec s;
  s.kind = Kind::Boost;
  s.boost.n_trees = n_trees;
  s.boost.depth = depth;
  s.boost.shrinkage = shrinkage;
  return s;
}

void LearnerSpec::validate() const {
  switch (kind) {
    case Kind::Mean:
      break;
    case Kind::Lasso:
      if (lasso.interaction_order < 1 || lasso.interaction_order > 3)
        throw DataError("lasso interaction order must be 1, 2 or 3");
      break;
    case Kind::Forest:
      if (forest.n_trees < 1) throw DataError("forest needs >= 1 tree");
      if (forest.min_leaf < 1) throw DataError("min_leaf must be >= 1");
      if (!(forest.honest_fraction > 0.0 && forest.honest_fraction < 1.0))
        throw DataError("honest fraction must lie in (0,1)");
      break;
    case Kind::Boost:
      if (boost.n_trees < 1) throw DataError("boosting needs >= 1 tree");
      if (!(boost.shrinkage > 0.0 && boost.shrinkage <= 1.0))
        throw DataError("shrinkage must lie in (0,1]");
      if (boost.depth < 0) throw DataError("depth must be >= 0");
      break;
  }
}

LearnerSpec LearnerSpec::parse(const std::string& text) {
  std::string head = text, args;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    head = text.substr(0, pos);
    args = text.substr(pos + 1);
  }
  LearnerSpec s;
  if (head == "mean") {
    s = mean();
  } else if (head == "lasso") {
    s = make_lasso();
  } else if (head == "forest") {
    s = make_forest();
  } else if (head == "boost") {
    s = make_boost();
  } else {
    throw DataError("unknown learner kind: " + head);
  }
  std::stringstream ss(args);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    if (kv.empty()) continue;
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw DataError("learner option needs key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const double val = std::stod(kv.substr(eq + 1));
    if (key == "order")
      s.lasso.interaction_order = static_cast<int>(val);
    else if (key == "trees") {
      s.forest.n_trees = static_cast<std::size_t>(val);
      s.boost.n_trees = static_cast<std::size_t>(val);
    } else if (key == "minleaf") {
      s.forest.min_leaf = static_cast<std::size_t>(val);
      s.boost.min_leaf = static_cast<std::size_t>(val);
    } else if (key == "mtry")
      s.forest.mtry = static_cast<std::size_t>(val);
    else if (key == "honest")
      s.forest.honest_fraction = val;
    else if (key == "subsample")
      s.forest.subsample_fraction = val;
    else if (key == "depth")
      s.boost.depth = static_cast<int>(val);
    else if (key == "shrink")
      s.boost.shrinkage = val;
    else if (key == "lambda")
      s.lasso.lambda_grid = {val};
    else
      throw DataError("unknown learner option: " + key);
  }
  s.validate();
  return s;
}

std::string LearnerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Mean:
      os << "mean";
      break;
    case Kind::Lasso:
      os << "lasso:order=" << lasso.interaction_order;
      break;
    case Kind::Forest:
      os << "forest:trees=" << forest.n_trees << ",minleaf=" << forest.min_leaf
         << ",mtry=" << forest.mtry;
      break;
    case Kind::Boost:
      os << "boost:trees=" << boost.n_trees << ",depth=" << boost.depth
         << ",shrink=" << boost.shrinkage;
      break;
  }
  return os.str();
}

// ---- models ---------------------------------------------------------------

namespace {

class MeanModel final : public RegressionModel {
 public:
  explicit MeanModel(double value) : value_(value) {}
  double predict(const Matrix&, std::size_t) const override { return value_; }

 private:
  double value_;
};

/// Appends interaction products of the base covariates to a row.
void expand_row(const std::vector<double>& base, int order,
                std::vector<double>& out) {
  out.assign(base.begin(), base.end());
  const std::size_t p = base.size();
  if (order >= 2)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) out.push_back(base[i] * base[j]);
  if (order >= 3)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        for (std::size_t k = j + 1; k < p; ++k)
          out.push_back(base[i] * base[j] * base[k]);
}

std::size_t expanded_cols(std::size_t p, int order) {
  std::size_t c = p;
  if (order >= 2) c += p * (p - 1) / 2;
  if (order >= 3) c += p * (p - 1) * (p - 2) / 6;
  return c;
}

Matrix expand_matrix(const Matrix& x, int order, std::size_t cap) {
  const std::size_t pe = expanded_cols(x.cols(), order);
  if (pe > cap)
    throw DataError("interaction expansion yields " + std::to_string(pe) +
                    " columns, above the cap of " + std::to_string(cap));
  Matrix out(x.rows(), pe);
  std::vector<double> base(x.cols()), row;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) base[j] = x(i, j);
    expand_row(base, order, row);
    for (std::size_t j = 0; j < pe; ++j) out(i, j) = row[j];
  }
  return out;
}

class LassoModel final : public RegressionModel {
 public:
  LassoModel(int order, double intercept, std::vector<double> coef_raw)
      : order_(order), intercept_(intercept), coef_(std::move(coef_raw)) {}

  double predict(const Matrix& x, std::size_t row) const override {
    std::vector<double> base(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) base[j] = x(row, j);
    std::vector<double> e;
    expand_row(base, order_, e);
    double v = intercept_;
    for (std::size_t j = 0; j < coef_.size() && j < e.size(); ++j)
      v += coef_[j] * e[j];
    return v;
  }

 private:
  int order_;
  double intercept_;
  std::vector<double> coef_;
};

struct Standardized {
  std::vector<double> mean, sd;  // per column; sd 0 marks inactive columns
};

Standardized column_moments(const Matrix& x, const std::vector<std::size_t>& rows) {
  Standardized st;
  const double n = static_cast<double>(rows.size());
  st.mean.resize(x.cols());
  st.sd.resize(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double s = 0.0, ss = 0.0;
    for (std::size_t i : rows) {
      s += x(i, j);
      ss += x(i, j) * x(i, j);
    }
    st.mean[j] = s / n;
    st.sd[j] = std::sqrt(std::max(0.0, ss / n - st.mean[j] * st.mean[j]));
  }
  return st;
}

/// Coordinate descent for the standardized lasso: minimizes
/// (1/2n)||r||^2 + lambda*||beta||_1 with unit-variance columns. `beta`
/// warm-starts and `resid` must match it on entry.
void coordinate_descent(const Matrix& xs, const std::vector<std::size_t>& rows,
                        const std::vector<bool>& active, double lambda,
                        std::vector<double>& beta, std::vector<double>& resid) {
  const double n = static_cast<double>(rows.size());
  const std::size_t p = xs.cols();
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!active[j]) continue;
      double rho = 0.0;
      for (std::size_t idx = 0; idx < rows.size(); ++idx)
        rho += xs(rows[idx], j) * resid[idx];
      rho = rho / n + beta[j];
      const double nb =
          std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho);
      const double diff = nb - beta[j];
      if (diff != 0.0) {
        for (std::size_t idx = 0; idx < rows.size(); ++idx)
          resid[idx] -= diff * xs(rows[idx], j);
        beta[j] = nb;
        max_change = std::max(max_change, std::abs(diff));
      }
    }
    if (max_change < 1e-7) break;
  }
}

struct LassoFit {
  double intercept_std = 0.0;  // mean of y on training rows
  std::vector<double> beta;    // standardized-scale coefficients
};

/// Fits one lambda on standardized columns (in-place standardization via
/// the moments). Returns standardized coefficients.
class LassoPathSolver {
 public:
  LassoPathSolver(const Matrix& xe, const std::vector<double>& y,
                  const std::vector<std::size_t>& rows)
      : rows_(rows), y_(y) {
    st_ = column_moments(xe, rows);
    xs_ = Matrix(xe.rows(), xe.cols());
    active_.resize(xe.cols());
    for (std::size_t j = 0; j < xe.cols(); ++j) {
      active_[j] = st_.sd[j] > 1e-12;
      if (!active_[j]) continue;
      for (std::size_t i : rows)
        xs_(i, j) = (xe(i, j) - st_.mean[j]) / st_.sd[j];
    }
    ybar_ = 0.0;
    for (std::size_t i : rows) ybar_ += y[i];
    ybar_ /= static_cast<double>(rows.size());
    beta_.assign(xe.cols(), 0.0);
    resid_.resize(rows.size());
    for (std::size_t idx = 0; idx < rows.size(); ++idx)
      resid_[idx] = y[rows[idx]] - ybar_;
  }

  double lambda_max() const {
    double lm = 0.0;
    const double n = static_cast<double>(rows_.size());
    for (std::size_t j = 0; j < active_.size(); ++j) {
      if (!active_[j]) continue;
      double rho = 0.0;
      for (std::size_t idx = 0; idx < rows_.size(); ++idx)
        rho += xs_(rows_[idx], j) * resid_[idx];
      lm = std::max(lm, std::abs(rho) / n);
    }
    return lm;
  }

  /// Solves at `lambda`, warm-starting from the previous solution.
  LassoFit solve(double lambda) {
    coordinate_descent(xs_, rows_, active_, lambda, beta_, resid_);
    return {ybar_, beta_};
  }

  /// Converts a standardized fit to raw-scale (intercept, coefficients).
  std::pair<double, std::vector<double>> to_raw(const LassoFit& fit) const {
    std::vector<double> coef(fit.beta.size(), 0.0);
    double intercept = fit.intercept_std;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      if (!active_[j] || fit.beta[j] == 0.0) continue;
      coef[j] = fit.beta[j] / st_.sd[j];
      intercept -= coef[j] * st_.mean[j];
    }
    return {intercept, coef};
  }

 private:
  const std::vector<std::size_t>& rows_;
  const std::vector<double>& y_;
  Standardized st_;
  Matrix xs_;
  std::vector<bool> active_;
  std::vector<double> beta_, resid_;
  double ybar_ = 0.0;
};

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(idx[i], idx[pick(rng)]);
  }
  return idx;
}

}  // namespace

FittedModel fit_lasso(const Matrix& x, const std::vector<double>& y,
                      const LearnerSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (y.size() < 2) throw DataError("lasso requires n >= 2");
  const Matrix xe =
      expand_matrix(x, spec.lasso.interaction_order, spec.lasso.column_cap);
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), 0);
  {
    auto st = column_moments(xe, all);
    if (*std::max_element(st.sd.begin(), st.sd.end()) <= 1e-12)
      throw DataError("all covariate columns are constant");
  }

  std::vector<double> grid = spec.lasso.lambda_grid;
  double chosen_lambda;
  double cv_rmse = std::numeric_limits<double>::quiet_NaN();
  if (grid.size() == 1) {
    chosen_lambda = grid[0];
  } else {
    if (grid.empty()) {
      LassoPathSolver probe(xe, y, all);
      const double lmax = std::max(probe.lambda_max(), 1e-12);
      for (int g = 0; g < 50; ++g)
        grid.push_back(lmax * std::pow(1e-3, g / 49.0));
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    // 5-fold CV over the path, warm starts within a fold.
    const std::size_t folds = std::min<std::size_t>(spec.lasso.cv_folds, y.size());
    auto rng = make_rng(seed, 0x6c6173);
    const auto perm = shuffled_indices(y.size(), rng);
    std::vector<double> sqerr(grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, val;
      for (std::size_t i = 0; i < perm.size(); ++i)
        (i % folds == f ? val : train).push_back(perm[i]);
      if (train.size() < 2 || val.empty()) continue;
      LassoPathSolver solver(xe, y, train);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        auto fit = solver.solve(grid[g]);
        auto [b0, coef] = solver.to_raw(fit);
        for (std::size_t i : val) {
          double pred = b0;
          for (std::size_t j = 0; j < coef.size(); ++j)
            if (coef[j] != 0.0) pred += coef[j] * xe(i, j);
          const double e = y[i] - pred;
          sqerr[g] += e * e;
        }
      }
    }
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(sqerr.begin(), sqerr.end()) - sqerr.begin());
    chosen_lambda = grid[best];
    cv_rmse = std::sqrt(sqerr[best] / static_cast<double>(y.size()));
  }

  LassoPathSolver solver(xe, y, all);
  // Warm-start down the path for stability at small lambda.
  if (grid.size() > 1)
    for (double l : grid) {
      solver.solve(l);
      if (l <= chosen_lambda) break;
    }
  auto fit = solver.solve(chosen_lambda);
  auto [b0, coef] = solver.to_raw(fit);
  FittedModel out;
  out.model = std::make_shared<LassoModel>(spec.lasso.interaction_order, b0,
                                           std::move(coef));
  out.training_rmse_cv = cv_rmse;
  return out;
}

// ---- forests --------------------------------------------------------------

namespace {

class ForestModel final : public RegressionModel {
 public:
  explicit ForestModel(std::vector<Tree> trees) : trees_(std::move(trees)) {}

  double predict(const Matrix& x, std::size_t row) const override {
    double s = 0.0;
    for (const Tree& t : trees_) s += t.predict_row(x, row);
    return s / static_cast<double>(trees_.size());
  }

  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
};

class BoostModel final : public RegressionModel {
 public:
  BoostModel(double f0, double shrinkage, std::vector<Tree> trees)
      : f0_(f0), shrinkage_(shrinkage), trees_(std::move(trees)) {}

  double predict(const Matrix& x, std::size_t row) const override {
    double v = f0_;
    for (const Tree& t : trees_) v += shrinkage_ * t.predict_row(x, row);
    return v;
  }

 private:
  double f0_;
  double shrinkage_;
  std::vector<Tree> trees_;
};

}  // namespace

FittedModel fit_forest(const Matrix& x, const std::vector<double>& y,
                       const LearnerSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = y.size();
  if (n < 2) throw DataError("forest requires n >= 2");
  if (spec.forest.min_leaf > n / 2)
    throw DataError("min_leaf larger than n/2");
  const std::size_t T = spec.forest.n_trees;
  TreeConfig cfg;
  cfg.min_leaf = spec.forest.min_leaf;
  cfg.mtry = spec.forest.mtry == 0 ? std::max<std::size_t>(1, x.cols() / 3)
                                   : spec.forest.mtry;

  std::vector<Tree> trees(T);
  std::vector<std::vector<bool>> inbag(T);
  const long TL = static_cast<long>(T);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (long t = 0; t < TL; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t), 0x74726565);
    std::vector<std::size_t> rows(n);
    std::vector<bool> bag(n, false);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = pick(rng);
      bag[rows[i]] = true;
    }
    trees[static_cast<std::size_t>(t)] =
        build_regression_tree(x, y, rows, cfg, rng);
    inbag[static_cast<std::size_t>(t)] = std::move(bag);
  }

  FittedModel out;
  out.oob_predictions.assign(n, 0.0);
  out.oob_defined.assign(n, false);
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (!inbag[t][i]) {
        out.oob_predictions[i] += trees[t].predict_row(x, i);
        ++counts[i];
      }
  for (std::size_t i = 0; i < n; ++i)
    if (counts[i] > 0) {
      out.oob_predictions[i] /= static_cast<double>(counts[i]);
      out.oob_defined[i] = true;
    }
  out.model = std::make_shared<ForestModel>(std::move(trees));
  return out;
}

FittedModel fit_boost(const Matrix& x, const std::vector<double>& y,
                      const LearnerSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = y.size();
  if (n < 2) throw DataError("boosting requires n >= 2");
  if (spec.boost.min_leaf > n / 2) throw DataError("min_leaf larger than n/2");
  TreeConfig cfg;
  cfg.min_leaf = spec.boost.min_leaf;
  cfg.max_depth = spec.boost.depth;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const double f0 = mean(y);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - f0;
  std::vector<Tree> trees;
  trees.reserve(spec.boost.n_trees);
  for (std::size_t t = 0; t < spec.boost.n_trees; ++t) {
    auto rng = make_rng(seed, t, 0x626f6f);
    Tree tree = build_regression_tree(x, resid, all, cfg, rng);
    for (std::size_t i = 0; i < n; ++i)
      resid[i] -= spec.boost.shrinkage * tree.predict_row(x, i);
    trees.push_back(std::move(tree));
  }
  FittedModel out;
  out.model =
      std::make_shared<BoostModel>(f0, spec.boost.shrinkage, std::move(trees));
  return out;
}

double CausalForestModel::predict_tau(const Matrix& x, std::size_t row) const {
  double s = 0.0;
  for (const Tree& t : trees) s += t.predict_row(x, row);
  return s / static_cast<double>(trees.size());
}

CausalForestModel fit_causal_forest(const Matrix& x, const std::vector<int>& w,
                                    const std::vector<double>& y,
                                    const LearnerSpec& spec,
                                    std::uint64_t seed) {
  spec.validate();
  const std::size_t n = y.size();
  std::vector<std::size_t> idx1, idx0;
  for (std::size_t i = 0; i < n; ++i) (w[i] == 1 ? idx1 : idx0).push_back(i);
  if (idx1.size() < spec.forest.min_leaf || idx0.size() < spec.forest.min_leaf)
    throw DataError("each treatment group needs at least min_leaf rows");
  const std::size_t T = spec.forest.n_trees;
  TreeConfig cfg;
  cfg.min_leaf = spec.forest.min_leaf;
  cfg.mtry = spec.forest.mtry == 0 ? std::max<std::size_t>(1, x.cols() / 3)
                                   : spec.forest.mtry;

  std::vector<Tree> trees(T);
  std::vector<std::vector<bool>> used(T);
  const long TL = static_cast<long>(T);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (long tl = 0; tl < TL; ++tl) {
    const auto t = static_cast<std::size_t>(tl);
    auto rng = make_rng(seed, t, 0x6366);
    // Stratified subsample without replacement, then an honest split of the
    // subsample into structure and estimation parts.
    auto draw = [&](const std::vector<std::size_t>& pool) {
      std::vector<std::size_t> s(pool);
      for (std::size_t i = s.size(); i-- > 1;) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(s[i], s[pick(rng)]);
      }
      const auto keep = std::max<std::size_t>(
          2, static_cast<std::size_t>(spec.forest.subsample_fraction *
                                      static_cast<double>(s.size())));
      s.resize(std::min(keep, s.size()));
      return s;
    };
    auto sub1 = draw(idx1);
    auto sub0 = draw(idx0);
    auto cut = [&](std::vector<std::size_t>& v, std::vector<std::size_t>& split,
                   std::vector<std::size_t>& est) {
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(spec.forest.honest_fraction *
                                      static_cast<double>(v.size())));
      split.insert(split.end(), v.begin(), v.begin() + static_cast<long>(k));
      est.insert(est.end(), v.begin() + static_cast<long>(k), v.end());
    };
    std::vector<std::size_t> split_rows, est_rows;
    cut(sub1, split_rows, est_rows);
    cut(sub0, split_rows, est_rows);
    if (est_rows.empty()) est_rows = split_rows;
    Tree tree = build_causal_tree(x, w, y, split_rows, cfg, rng);
    // Honest leaf estimates from the held-out part.
    const auto leaves = tree.leaf_ids();
    std::vector<double> s1(tree.nodes.size(), 0.0), s0(tree.nodes.size(), 0.0);
    std::vector<std::size_t> c1(tree.nodes.size(), 0), c0(tree.nodes.size(), 0);
    for (std::size_t i : est_rows) {
      const auto leaf = static_cast<std::size_t>(tree.leaf_index(x, i));
      if (w[i] == 1) {
        s1[leaf] += y[i];
        ++c1[leaf];
      } else {
        s0[leaf] += y[i];
        ++c0[leaf];
      }
    }
    double root_s1 = 0.0, root_s0 = 0.0;
    std::size_t root_c1 = 0, root_c0 = 0;
    for (int l : leaves) {
      const auto li = static_cast<std::size_t>(l);
      root_s1 += s1[li];
      root_c1 += c1[li];
      root_s0 += s0[li];
      root_c0 += c0[li];
    }
    const double root_tau =
        (root_c1 > 0 && root_c0 > 0)
            ? root_s1 / static_cast<double>(root_c1) -
                  root_s0 / static_cast<double>(root_c0)
            : tree.nodes[0].value;
    for (int l : leaves) {
      const auto li = static_cast<std::size_t>(l);
      tree.nodes[li].value =
          (c1[li] > 0 && c0[li] > 0)
              ? s1[li] / static_cast<double>(c1[li]) -
                    s0[li] / static_cast<double>(c0[li])
              : root_tau;
    }
    std::vector<bool> in_use(n, false);
    for (std::size_t i : split_rows) in_use[i] = true;
    for (std::size_t i : est_rows) in_use[i] = true;
    trees[t] = std::move(tree);
    used[t] = std::move(in_use);
  }

  CausalForestModel out;
  out.tau_oob.assign(n, 0.0);
  out.oob_defined.assign(n, false);
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (!used[t][i]) {
        out.tau_oob[i] += trees[t].predict_row(x, i);
        ++counts[i];
      }
  for (std::size_t i = 0; i < n; ++i)
    if (counts[i] > 0) {
      out.tau_oob[i] /= static_cast<double>(counts[i]);
      out.oob_defined[i] = true;
    }
  out.trees = std::move(trees);
  return out;
}

FittedModel fit_learner(const Matrix& x, const std::vector<double>& y,
                        const LearnerSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case LearnerSpec::Kind::Mean: {
      FittedModel out;
      out.model = std::make_shared<MeanModel>(mean(y));
      return out;
    }
    case LearnerSpec::Kind::Lasso:
      return fit_lasso(x, y, spec, seed);
    case LearnerSpec::Kind::Forest:
      return fit_forest(x, y, spec, seed);
    case LearnerSpec::Kind::Boost:
      return fit_boost(x, y, spec, seed);
  }
  throw DataError("unreachable learner kind");
}

std::pair<LearnerSpec, CvReport> select_learner(
    const std::vector<LearnerSpec>& candidates, const Matrix& x,
    const std::vector<double>& y, std::size_t folds, std::uint64_t seed) {
  if (candidates.empty()) throw DataError("no learner candidates");
  if (folds < 2) throw DataError("selection needs >= 2 folds");
  const std::size_t n = y.size();
  auto rng = make_rng(seed, 0x73656c);
  const auto perm = shuffled_indices(n, rng);
  CvReport report;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double sqerr = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, val;
      for (std::size_t i = 0; i < n; ++i)
        (i % folds == f ? val : train).push_back(perm[i]);
      Matrix xt = x.take_rows(train);
      std::vector<double> yt;
      yt.reserve(train.size());
      for (std::size_t i : train) yt.push_back(y[i]);
      FittedModel m = fit_learner(xt, yt, candidates[c], splitmix64(seed) + f);
      for (std::size_t i : val) {
        const double e = y[i] - m.predict(x, i);
        sqerr += e * e;
      }
    }
    report.candidate_names.push_back(candidates[c].describe());
    report.rmse.push_back(std::sqrt(sqerr / static_cast<double>(n)));
  }
  report.best_index = static_cast<std::size_t>(
      std::min_element(report.rmse.begin(), report.rmse.end()) -
      report.rmse.begin());
  return {candidates[report.best_index], report};
}

std::vector<double> trim_propensity(std::vector<double> p, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw DataError("eps must lie in (0, 0.5)");
  for (double& v : p) v = std::clamp(v, eps, 1.0 - eps);
  return p;
}

}  // namespace ccacr
