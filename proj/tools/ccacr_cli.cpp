// Command-line front end: estimation, decomposition, dominance and LiM
// tests, DML, simulation, and type enumeration.
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ccacr/dataset.hpp"
#include "ccacr/dml.hpp"
#include "ccacr/estimators.hpp"
#include "ccacr/limtest.hpp"
#include "ccacr/sim.hpp"
#include "ccacr/types.hpp"

using nlohmann::json;
using namespace ccacr;

namespace {

struct IoOptions {
  std::string format = "text";
  std::string output;  // empty = stdout
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_io(CLI::App* cmd, IoOptions& io) {
  cmd->add_option("--format", io.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd->add_option("--output", io.output, "Output file (default stdout)");
  cmd->add_option("--seed", io.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--threads", io.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
}

struct DataOptions {
  std::string input;
  std::string outcome = "y";
  std::string treatment = "d";
  std::vector<std::string> instruments;
  std::vector<std::string> covariates;
};

void add_data(CLI::App* cmd, DataOptions& d, bool need_outcome = true) {
  cmd->add_option("--input", d.input, "Input CSV file")->required();
  if (need_outcome)
    cmd->add_option("--outcome", d.outcome, "Outcome column")
        ->capture_default_str();
  cmd->add_option("--treatment", d.treatment, "Treatment column")
      ->capture_default_str();
  cmd->add_option("--instruments", d.instruments, "Instrument columns")
      ->required()
      ->delimiter(',');
  cmd->add_option("--covariates", d.covariates, "Covariate columns")
      ->delimiter(',');
}

/// Six significant digits for the text renderer.
std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void emit(const IoOptions& io, const json& report,
          const std::string& text_body) {
  std::string body =
      io.format == "json" ? report.dump(2) + "\n" : text_body;
  if (io.output.empty()) {
    std::cout << body;
  } else {
    std::ofstream f(io.output, std::ios::binary);
    if (!f) throw DataError("cannot open output file: " + io.output);
    f << body;
  }
}

json echo_data(const DataOptions& d) {
  return {{"input", d.input},
          {"outcome", d.outcome},
          {"treatment", d.treatment},
          {"instruments", d.instruments},
          {"covariates", d.covariates}};
}

json margin_weights_json(const MarginWeights& w) {
  return {{"margins", w.margins},
          {"raw", w.raw},
          {"normalized", w.normalized},
          {"normalization_defined", w.normalization_defined},
          {"lim_consistent", w.lim_consistent}};
}

// ---- subcommand bodies ----------------------------------------------------

int run_estimate(const DataOptions& d, const IoOptions& io, double ci_level) {
  IvDataset data =
      load_csv(d.input, d.outcome, d.treatment, d.instruments, d.covariates);
  CollapsedSample s = collapse_instruments(data);
  CcAcrEstimate est = cc_acr_wald(s, ci_level);

  json rep = {{"command", "estimate"},
              {"config",
               {{"data", echo_data(d)}, {"ci_level", ci_level},
                {"seed", io.seed}}},
              {"beta", est.beta},
              {"se", est.se},
              {"ci_low", est.ci_low},
              {"ci_high", est.ci_high},
              {"numerator", est.numerator},
              {"denominator", est.denominator},
              {"orientation", est.orientation},
              {"n1", est.n1},
              {"n0", est.n0},
              {"dropped_intermediate_rows", s.dropped}};

  std::ostringstream txt;
  txt << "CC-ACR estimate\n"
      << "  beta        " << fmt6(est.beta) << "\n"
      << "  se          " << fmt6(est.se) << "\n"
      << "  ci          [" << fmt6(est.ci_low) << ", " << fmt6(est.ci_high)
      << "]\n"
      << "  numerator   " << fmt6(est.numerator) << "\n"
      << "  denominator " << fmt6(est.denominator) << "\n"
      << "  n1 / n0     " << est.n1 << " / " << est.n0 << "\n"
      << "  dropped     " << s.dropped << " intermediate rows\n";

  // Margin weights when the treatment is integer-coded.
  bool integer_coded = true;
  for (double v : s.d)
    if (v != std::floor(v) || v < 0) integer_coded = false;
  if (integer_coded) {
    MarginWeights w = margin_weights(s);
    rep["margin_weights"] = margin_weights_json(w);
    txt << "  margin weights:\n";
    for (std::size_t j = 0; j < w.margins.size(); ++j)
      txt << "    j=" << w.margins[j] << "  raw " << fmt6(w.raw[j])
          << (w.normalization_defined
                  ? "  normalized " + fmt6(w.normalized[j])
                  : std::string())
          << "\n";
    if (!w.lim_consistent)
      txt << "  WARNING: negative margin weight (LiM violation signal)\n";
  }
  emit(io, rep, txt.str());
  return 0;
}

int run_decompose(const DataOptions& d, const IoOptions& io) {
  IvDataset data =
      load_csv(d.input, d.outcome, d.treatment, d.instruments, d.covariates);
  TslsDecomposition dec = tsls_decomposition(data);
  const double sat = tsls_saturated(data);

  json rep = {{"command", "decompose"},
              {"config", {{"data", echo_data(d)}, {"seed", io.seed}}},
              {"beta_tsls", dec.beta_tsls},
              {"tsls_saturated", sat},
              {"support_assignments", dec.support_assignments},
              {"first_stage_means", dec.first_stage_means},
              {"outcome_means", dec.outcome_means},
              {"probs", dec.probs},
              {"omega", dec.omega},
              {"delta", dec.delta},
              {"beta_wald", dec.beta_wald},
              {"mu", dec.mu}};

  std::ostringstream txt;
  txt << "TSLS decomposition (" << dec.first_stage_means.size()
      << " support points)\n"
      << "  beta_tsls  " << fmt6(dec.beta_tsls) << "  (saturated check "
      << fmt6(sat) << ")\n"
      << "  m   E[D|z_m]   omega      delta      beta_pair  mu\n";
  for (std::size_t m = 0; m < dec.omega.size(); ++m)
    txt << "  " << m + 1 << "   " << fmt6(dec.first_stage_means[m + 1]) << "  "
        << fmt6(dec.omega[m]) << "  " << fmt6(dec.delta[m]) << "  "
        << fmt6(dec.beta_wald[m]) << "  " << fmt6(dec.mu[m]) << "\n";
  emit(io, rep, txt.str());
  return 0;
}

int run_ks(const DataOptions& d, const IoOptions& io, std::size_t resamples) {
  IvDataset data =
      load_csv(d.input, d.outcome, d.treatment, d.instruments, d.covariates);
  CollapsedSample s = collapse_instruments(data);
  DominanceTest t = ks_dominance_test(s, resamples, io.seed);
  json rep = {{"command", "ks-test"},
              {"config",
               {{"data", echo_data(d)}, {"resamples", resamples},
                {"seed", io.seed}}},
              {"statistic", t.statistic},
              {"p_value", t.p_value},
              {"crossings", t.crossings},
              {"resamples", t.resamples}};
  std::ostringstream txt;
  txt << "Dominance (KS one-sided) test\n"
      << "  statistic  " << fmt6(t.statistic) << "\n"
      << "  p-value    " << fmt6(t.p_value) << "  (" << t.resamples
      << " permutations)\n"
      << "  crossings  " << t.crossings.size() << "\n";
  emit(io, rep, txt.str());
  return 0;
}

int run_dml(const DataOptions& d, const IoOptions& io, const DmlSpecs& specs,
            std::size_t folds, std::size_t splits, double eps,
            double ci_level) {
  IvDataset data =
      load_csv(d.input, d.outcome, d.treatment, d.instruments, d.covariates);
  CollapsedSample s = collapse_instruments(data);
  DmlEstimate est =
      dml_estimate(s, specs, folds, splits, eps, io.seed, ci_level);
  json rep = {{"command", "dml"},
              {"config",
               {{"data", echo_data(d)},
                {"folds", folds},
                {"splits", splits},
                {"trim", eps},
                {"ci_level", ci_level},
                {"learner_y", specs.learner_y.describe()},
                {"learner_d", specs.learner_d.describe()},
                {"learner_z", specs.learner_z.describe()},
                {"seed", io.seed}}},
              {"beta", est.beta},
              {"se", est.se},
              {"ci_low", est.ci_low},
              {"ci_high", est.ci_high},
              {"per_split_betas", est.per_split_betas},
              {"per_split_ses", est.per_split_ses},
              {"aggregation", "median"},
              {"n", est.n},
              {"trimmed_count", est.trimmed_count},
              {"max_abs_score", est.max_abs_score}};
  std::ostringstream txt;
  txt << "DML estimate (" << splits << " splits x " << folds << " folds)\n"
      << "  beta  " << fmt6(est.beta) << "\n"
      << "  se    " << fmt6(est.se) << "\n"
      << "  ci    [" << fmt6(est.ci_low) << ", " << fmt6(est.ci_high) << "]\n"
      << "  trimmed propensities: " << est.trimmed_count << "\n";
  emit(io, rep, txt.str());
  return 0;
}

json half_json(const HalfSummary& h) {
  json leaves = json::array();
  for (const LeafTest& l : h.leaves) {
    json lj = {{"leaf_id", l.leaf_id},
               {"n_leaf", l.n_leaf},
               {"mean_gamma", l.mean_gamma},
               {"t_train", l.t_train},
               {"passed_screen", l.passed_screen}};
    if (l.t_holdout) lj["t_holdout"] = *l.t_holdout;
    leaves.push_back(lj);
  }
  return {{"tree", h.tree_text},
          {"first_split_feature", h.first_split_feature},
          {"l_max", h.l_max},
          {"zero_variance_leaves", h.zero_variance_leaves},
          {"skipped_small_leaves", h.skipped_small_leaves},
          {"leaves", leaves}};
}

int run_limtest(const DataOptions& d, const IoOptions& io,
                const LimTestConfig& cfg) {
  IvDataset data =
      load_csv(d.input, d.outcome, d.treatment, d.instruments, d.covariates);
  CollapsedSample s = collapse_instruments(data);
  auto [codes, enc] = encode_treatment_levels(s.d);
  for (std::size_t i = 0; i < s.n(); ++i)
    s.d[i] = static_cast<double>(codes[i]);
  LimTestReport r = lim_test(s, cfg, io.seed);

  json margins = json::array();
  for (const MarginResult& m : r.margins) {
    json mj = {{"margin", m.margin},
               {"reject", m.reject},
               {"t_vec", m.t_vec},
               {"half_a", half_json(m.half_a)},
               {"half_b", half_json(m.half_b)}};
    if (m.max_t) mj["max_t"] = *m.max_t;
    if (m.threshold) mj["threshold"] = *m.threshold;
    margins.push_back(mj);
  }
  json rep = {{"command", "lim-test"},
              {"config",
               {{"data", echo_data(d)},
                {"alpha", cfg.alpha},
                {"min_leaf", r.min_leaf},
                {"trim", cfg.eps},
                {"learner", cfg.forest.describe()},
                {"seed", io.seed}}},
              {"margins", margins},
              {"overall_reject", r.overall_reject}};
  std::ostringstream txt;
  txt << "LiM violation test (alpha " << fmt6(r.alpha) << ", min_leaf "
      << r.min_leaf << ")\n";
  for (const MarginResult& m : r.margins) {
    txt << "  margin " << m.margin << " (level "
        << fmt6(enc.decode(m.margin - 1)) << " -> "
        << fmt6(enc.decode(m.margin)) << "): "
        << (m.reject ? "REJECT" : "fail to reject");
    if (m.max_t)
      txt << "  max T " << fmt6(*m.max_t) << " vs " << fmt6(*m.threshold);
    txt << "\n";
    txt << "  tree (half A):\n" << m.half_a.tree_text;
    txt << "  tree (half B):\n" << m.half_b.tree_text;
  }
  txt << "  overall: " << (r.overall_reject ? "REJECT" : "fail to reject")
      << "\n";
  emit(io, rep, txt.str());
  return 0;
}

int run_simulate(const IoOptions& io, const std::string& scenario,
                 std::size_t reps, std::size_t n_override,
                 const LimTestConfig& cfg) {
  ScenarioConfig config = builtin_scenario(scenario);
  if (n_override > 0) config.n = n_override;
  McReport r = run_monte_carlo(config, reps, cfg, io.seed);

  json shares = json::array();
  for (const auto& e : config.shares.entries) {
    json ej = {{"type", e.type.label()}, {"share", e.share}};
    if (e.condition_covariate) ej["condition"] = *e.condition_covariate;
    shares.push_back(ej);
  }
  json rep = {{"command", "simulate"},
              {"config",
               {{"scenario", config.name},
                {"n", config.n},
                {"p_ztilde", config.p_ztilde},
                {"levels", config.levels},
                {"shares", shares},
                {"reps", reps},
                {"alpha", cfg.alpha},
                {"learner", cfg.forest.describe()},
                {"seed", io.seed}}},
              {"reps", r.reps},
              {"failed_reps", r.failed_reps},
              {"margins", r.margins},
              {"reject_counts", r.reject_counts},
              {"reject_rates", r.reject_rates},
              {"first_split_counts", r.first_split_counts},
              {"covariates", config.covariates.names}};
  std::ostringstream txt;
  txt << "Monte Carlo: scenario " << config.name << ", " << r.reps
      << " reps, n " << config.n << "\n";
  for (std::size_t m = 0; m < r.margins.size(); ++m) {
    txt << "  margin " << r.margins[m] << ": reject rate "
        << fmt6(100.0 * r.reject_rates[m]) << "%  first split: ";
    for (std::size_t c = 0; c < config.covariates.names.size(); ++c)
      if (r.first_split_counts[m][c] > 0)
        txt << config.covariates.names[c] << "="
            << r.first_split_counts[m][c] << " ";
    txt << "\n";
  }
  if (r.failed_reps > 0) txt << "  failed reps: " << r.failed_reps << "\n";
  txt << "  elapsed " << fmt6(r.seconds) << " s\n";
  emit(io, rep, txt.str());
  return 0;
}

int run_types(const IoOptions& io, int levels, int instruments,
              const std::string& rule_name) {
  const int J = levels - 1;
  if (J < 1) throw DataError("need at least two levels");
  MonotonicityRule rule = MonotonicityRule::none();
  if (rule_name == "lim") {
    rule = MonotonicityRule::lim();
  } else if (rule_name == "pm") {
    rule = MonotonicityRule::pm(std::vector<int>(
        static_cast<std::size_t>(instruments), 1));
  } else if (rule_name == "iam") {
    std::vector<int> order(std::size_t{1} << instruments);
    std::iota(order.begin(), order.end(), 0);
    rule = MonotonicityRule::iam(order);
  } else if (rule_name != "none") {
    throw DataError("unknown rule: " + rule_name);
  }
  const auto all = enumerate_types(J, instruments);
  std::size_t count = 0;
  for (const auto& t : all)
    if (classify(t, rule)) ++count;
  json rep = {{"command", "types"},
              {"config",
               {{"levels", levels},
                {"instruments", instruments},
                {"rule", rule_name},
                {"seed", io.seed}}},
              {"total", all.size()},
              {"allowed", count}};
  emit(io, rep, std::to_string(count) + "\n");
  return 0;
}

int run_binarize(const IoOptions& io, const std::string& input,
                 const std::string& column, double low, double high) {
  const std::vector<double> values = load_column(input, column);
  BinarizedInstrument b = binarize_instrument(values, low, high);
  std::size_t kept = 0;
  for (bool k : b.kept)
    if (k) ++kept;
  json out_values = json::array();
  std::ostringstream txt;
  txt << "row,value\n";
  std::size_t vi = 0;
  for (std::size_t i = 0; i < b.kept.size(); ++i) {
    if (!b.kept[i]) continue;
    out_values.push_back({{"row", i}, {"value", b.values[vi]}});
    txt << i << "," << b.values[vi] << "\n";
    ++vi;
  }
  json rep = {{"command", "binarize"},
              {"config",
               {{"input", input},
                {"column", column},
                {"low", low},
                {"high", high},
                {"seed", io.seed}}},
              {"low_cutoff", b.low_cutoff},
              {"high_cutoff", b.high_cutoff},
              {"kept", kept},
              {"masked", b.kept.size() - kept},
              {"values", out_values}};
  emit(io, rep, txt.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal inference with multiple binary instruments: "
               "combined-complier estimation and monotonicity diagnostics"};
  app.require_subcommand(1);

  IoOptions io;
  DataOptions d;
  double ci_level = 0.95;

  auto* est = app.add_subcommand("estimate", "Subsample Wald CC-ACR estimate");
  add_data(est, d);
  est->add_option("--ci", ci_level, "Confidence level")->capture_default_str();
  add_io(est, io);

  auto* dec = app.add_subcommand("decompose", "TSLS weight decomposition");
  add_data(dec, d);
  add_io(dec, io);

  std::size_t resamples = 2000;
  auto* ks = app.add_subcommand("ks-test", "One-sided dominance test");
  add_data(ks, d);
  ks->add_option("--resamples", resamples, "Permutation resamples")
      ->capture_default_str();
  add_io(ks, io);

  std::size_t folds = 5, splits = 5;
  double eps = 0.01;
  std::string ly = "forest", ld = "forest", lz = "forest";
  auto* dml = app.add_subcommand("dml", "Double/debiased ML estimate");
  add_data(dml, d);
  dml->add_option("--folds", folds)->capture_default_str();
  dml->add_option("--splits", splits)->capture_default_str();
  dml->add_option("--trim", eps)->capture_default_str();
  dml->add_option("--learner-y", ly, "Outcome learner spec")
      ->capture_default_str();
  dml->add_option("--learner-d", ld, "Treatment learner spec")
      ->capture_default_str();
  dml->add_option("--learner-z", lz, "Propensity learner spec")
      ->capture_default_str();
  dml->add_option("--ci", ci_level, "Confidence level")->capture_default_str();
  add_io(dml, io);

  double alpha = 0.05;
  std::size_t min_leaf = 0;
  std::string learner = "forest";
  auto* lim = app.add_subcommand("lim-test", "Local LiM violation test");
  add_data(lim, d, /*need_outcome=*/false);
  lim->add_option("--alpha", alpha)->capture_default_str();
  lim->add_option("--min-leaf", min_leaf, "0 = max(20, ceil(n/30))")
      ->capture_default_str();
  lim->add_option("--trim", eps)->capture_default_str();
  lim->add_option("--learner", learner, "Nuisance forest spec")
      ->capture_default_str();
  add_io(lim, io);

  std::string scenario = "lim-valid";
  std::size_t reps = 200, n_override = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo harness");
  sim->add_option("--scenario", scenario, "lim-valid or lim-violated")
      ->capture_default_str();
  sim->add_option("--reps", reps)->capture_default_str();
  sim->add_option("--n", n_override, "Override sample size");
  sim->add_option("--alpha", alpha)->capture_default_str();
  sim->add_option("--min-leaf", min_leaf)->capture_default_str();
  sim->add_option("--learner", learner, "Nuisance forest spec")
      ->capture_default_str();
  add_io(sim, io);

  int n_levels = 3, n_instruments = 2;
  std::string rule = "none";
  auto* ty = app.add_subcommand("types", "Count response types under a rule");
  ty->add_option("--levels", n_levels, "Number of treatment levels (J+1)")
      ->capture_default_str();
  ty->add_option("--instruments", n_instruments)->capture_default_str();
  ty->add_option("--rule", rule, "none|lim|pm|iam")->capture_default_str();
  add_io(ty, io);

  std::string bin_input, bin_column;
  double low = 0.25, high = 0.75;
  auto* bi = app.add_subcommand("binarize", "Binarize a continuous column");
  bi->add_option("--input", bin_input)->required();
  bi->add_option("--column", bin_column)->required();
  bi->add_option("--low", low, "Lower percentile")->capture_default_str();
  bi->add_option("--high", high, "Upper percentile")->capture_default_str();
  add_io(bi, io);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Normalize every usage error to exit code 2; --help stays 0.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    set_num_threads(io.threads);
    if (est->parsed()) return run_estimate(d, io, ci_level);
    if (dec->parsed()) return run_decompose(d, io);
    if (ks->parsed()) return run_ks(d, io, resamples);
    if (dml->parsed()) {
      DmlSpecs specs;
      specs.learner_y = LearnerSpec::parse(ly);
      specs.learner_d = LearnerSpec::parse(ld);
      specs.learner_z = LearnerSpec::parse(lz);
      return run_dml(d, io, specs, folds, splits, eps, ci_level);
    }
    LimTestConfig cfg;
    cfg.alpha = alpha;
    cfg.min_leaf = min_leaf;
    cfg.eps = eps;
    cfg.forest = LearnerSpec::parse(learner);
    if (lim->parsed()) return run_limtest(d, io, cfg);
    if (sim->parsed()) return run_simulate(io, scenario, reps, n_override, cfg);
    if (ty->parsed()) return run_types(io, n_levels, n_instruments, rule);
    if (bi->parsed()) return run_binarize(io, bin_input, bin_column, low, high);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "no subcommand\n";
  return 2;
}
