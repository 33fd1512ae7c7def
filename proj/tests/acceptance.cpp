// Acceptance suite: nine end-to-end criteria, one PASS/FAIL line each.
// Exit code 0 only if every criterion passes.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccacr/dataset.hpp"
#include "ccacr/dml.hpp"
#include "ccacr/estimators.hpp"
#include "ccacr/limtest.hpp"
#include "ccacr/sim.hpp"
#include "ccacr/types.hpp"
#include "helpers.hpp"

using namespace ccacr;
using ccacr::testing::random_iv_dataset;
using ccacr::testing::two_type_dgp;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void report(int criterion, const char* name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("CRITERION %d (%s): %s — %s [%.1f s]\n", criterion, name,
              pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---- 1. type counts -------------------------------------------------------

void criterion1() {
  Timer t;
  auto count = [](int J, int K, const MonotonicityRule& rule) {
    std::size_t c = 0;
    for (const auto& ty : enumerate_types(J, K))
      if (classify(ty, rule)) ++c;
    return c;
  };
  const std::size_t total22 = enumerate_types(2, 2).size();
  const std::size_t lim22 = count(2, 2, MonotonicityRule::lim());
  const std::size_t pm22 = count(2, 2, MonotonicityRule::pm({1, 1}));
  const std::size_t iam22 = count(2, 2, MonotonicityRule::iam({0, 1, 2, 3}));
  const std::size_t total21 = enumerate_types(2, 1).size();
  const std::size_t lim21 = count(2, 1, MonotonicityRule::lim());
  const std::size_t pm21 = count(2, 1, MonotonicityRule::pm({1}));
  const std::size_t iam21 = count(2, 1, MonotonicityRule::iam({0, 1}));

  const bool others_ok = total22 == 81 && lim22 == 54 && pm22 == 20 &&
                         total21 == 9 && lim21 == 6 && pm21 == 6 && iam21 == 6;
  const bool iam_states_14 = iam22 == 14;  // the stated target
  std::ostringstream d;
  d << "J=2,K=2: total " << total22 << ", LiM " << lim22 << ", PM " << pm22
    << ", IAM " << iam22 << "; J=2,K=1: " << total21 << "/" << lim21 << "/"
    << pm21 << "/" << iam21;
  if (!iam_states_14)
    d << " — IAM sub-check expects 14 but the classifier (which reproduces "
         "the reference table's per-row checkmarks exactly; 15 rows carry "
         "one) yields 15 = C(6,2) weakly monotone sequences; the stated 14 "
         "contradicts its own table and is left failing deliberately";
  report(1, "type counts", others_ok && iam_states_14 && t.seconds() < 1.0,
         t.seconds(), d.str());
}

// ---- 2. margin-weight oracle ---------------------------------------------

void criterion2() {
  Timer t;
  const ScenarioConfig valid = builtin_scenario("lim-valid");
  const auto raw = population_margin_weights(valid.shares, 2);
  // Independent brute-force oracle via the population CDFs at z~=0 / z~=1.
  std::array<double, 4> f0{}, f1{};
  for (const auto& e : valid.shares.entries) {
    for (int j = e.type.d00; j < 3; ++j) f0[static_cast<std::size_t>(j)] += e.share;
    for (int j = e.type.d11; j < 3; ++j) f1[static_cast<std::size_t>(j)] += e.share;
  }
  const double o1 = f0[0] - f1[0], o2 = f0[1] - f1[1];
  const bool oracle_ok = std::abs(raw[0] - o1) < 1e-12 &&
                         std::abs(raw[1] - o2) < 1e-12;
  const bool values_ok = std::abs(raw[0] - 0.20) < 1e-12 &&
                         std::abs(raw[1] - 0.15) < 1e-12;

  // Violated preset: the conditioned defier flips margin-1 mass within the
  // south stratum (share/P(south) there; others rescaled proportionally).
  const ScenarioConfig bad = builtin_scenario("lim-violated");
  const double ps = bad.covariates.probs[0];
  TypeShareSpec south;
  double uncond = 0.0, cond = 0.0;
  for (const auto& e : bad.shares.entries)
    (e.condition_covariate ? cond : uncond) += e.share;
  for (const auto& e : bad.shares.entries) {
    TypeShareEntry se = e;
    se.share = e.condition_covariate ? e.share / ps
                                     : e.share * (1.0 - cond / ps) / uncond;
    se.condition_covariate.reset();
    south.entries.push_back(se);
  }
  const auto raw_south = population_margin_weights(south, 2);
  const bool neg_ok = raw_south[0] < 0.0;

  report(2, "margin-weight oracle",
         oracle_ok && values_ok && neg_ok && t.seconds() < 1.0, t.seconds(),
         "valid raw = (" + fmt(raw[0]) + ", " + fmt(raw[1]) +
             "); violated within-south margin-1 raw = " + fmt(raw_south[0]));
}

// ---- 3. decomposition identity -------------------------------------------

void criterion3() {
  Timer t;
  double worst_beta = 0.0, worst_mu = 0.0;
  bool ok = true;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    IvDataset data = random_iv_dataset(2000, 2, 1000 + rep);
    TslsDecomposition dec = tsls_decomposition(data);
    const double sat = tsls_saturated(data);
    double mu_sum = 0.0;
    for (double m : dec.mu) mu_sum += m;
    worst_beta = std::max(worst_beta, std::abs(dec.beta_tsls - sat));
    worst_mu = std::max(worst_mu, std::abs(mu_sum - 1.0));
  }
  ok = worst_beta < 1e-8 && worst_mu < 1e-10 && t.seconds() < 10.0;
  report(3, "decomposition identity", ok, t.seconds(),
         "50 datasets: max |beta_tsls - saturated| = " + fmt(worst_beta) +
             ", max |sum(delta*omega) - 1| = " + fmt(worst_mu));
}

// ---- 4. estimator consistency --------------------------------------------

void criterion4() {
  Timer t;
  CollapsedSample s = two_type_dgp(200000, 2.0, 2024);
  CcAcrEstimate e = cc_acr_wald(s);
  MarginWeights w = margin_weights(s);
  double raw_sum = 0.0;
  for (double r : w.raw) raw_sum += r;
  const bool ok = std::abs(e.beta - 2.0) <= 0.02 &&
                  std::abs(raw_sum - e.denominator) < 1e-12 &&
                  t.seconds() < 30.0;
  report(4, "estimator consistency", ok, t.seconds(),
         "wald beta = " + fmt(e.beta) + " (truth 2.0), |sum(raw) - denom| = " +
             fmt(std::abs(raw_sum - e.denominator)));
}

// ---- 5. DML reduction and coverage ---------------------------------------

void criterion5() {
  Timer t;
  DmlSpecs means;
  means.learner_y = LearnerSpec::mean();
  means.learner_d = LearnerSpec::mean();
  means.learner_z = LearnerSpec::mean();
  CollapsedSample s0 = two_type_dgp(4000, 2.0, 555);
  const double wald = cc_acr_wald(s0).beta;
  const double dml0 = dml_estimate(s0, means, 1, 1, 0.01, 3).beta;
  const double gap = std::abs(dml0 - wald);

  DmlSpecs lasso;
  lasso.learner_y = LearnerSpec::make_lasso();
  lasso.learner_d = LearnerSpec::make_lasso();
  lasso.learner_z = LearnerSpec::make_lasso();
  std::size_t covered = 0;
  const std::size_t reps = 200;
  for (std::size_t r = 0; r < reps; ++r) {
    CollapsedSample s = generate_linear_dgp(5000, 2.0, 9000 + r);
    DmlEstimate e = dml_estimate(s, lasso, 2, 1, 0.01, 100 + r);
    if (e.ci_low <= 2.0 && 2.0 <= e.ci_high) ++covered;
  }
  const double rate = static_cast<double>(covered) / static_cast<double>(reps);
  const bool ok = gap < 1e-10 && rate >= 0.90 && t.seconds() < 60.0;
  report(5, "DML reduction and coverage", ok, t.seconds(),
         "|DML - Wald| (intercept-only, K=1) = " + fmt(gap) +
             "; 95% CI coverage = " + fmt(100.0 * rate) + "% of 200 reps");
}

// ---- 6. LiM-test Monte Carlo ---------------------------------------------

void criterion6() {
  Timer t;
  LimTestConfig cfg;  // defaults: 500-tree honest forests, auto min_leaf
  const std::size_t reps = 200;
  McReport valid = run_monte_carlo(builtin_scenario("lim-valid"), reps, cfg, 31);
  McReport bad = run_monte_carlo(builtin_scenario("lim-violated"), reps, cfg, 32);

  const double v1 = valid.reject_rates[0], v2 = valid.reject_rates[1];
  const double b1 = bad.reject_rates[0], b2 = bad.reject_rates[1];
  double south_share = 0.0;
  if (bad.reject_counts[0] > 0)
    south_share = static_cast<double>(bad.first_split_counts[0][0]) /
                  static_cast<double>(bad.reject_counts[0]);
  const bool ok = v1 <= 0.075 && v2 <= 0.075 && b1 >= 0.90 && b2 <= 0.075 &&
                  south_share >= 0.80 && valid.failed_reps == 0 &&
                  bad.failed_reps == 0;
  report(6, "LiM-test Monte Carlo", ok, t.seconds(),
         "valid rejections = (" + fmt(100 * v1) + "%, " + fmt(100 * v2) +
             "%); violated = (" + fmt(100 * b1) + "%, " + fmt(100 * b2) +
             "%); first split at south among rejections = " +
             fmt(100 * south_share) + "%");
}

// ---- 7. AIPW double robustness -------------------------------------------

void criterion7() {
  Timer t;
  // Known propensity 0.5, tau-hat 0, mu-hat deliberately misspecified at a
  // constant 0.9: the IPW correction alone must stay unbiased for the
  // margin effect.
  const double true_tau = 0.2, e_known = 0.5, mu_wrong = 0.9;
  const std::size_t reps = 50, n = 4000;
  std::vector<double> rep_means;
  for (std::size_t r = 0; r < reps; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = make_rng(7000 + r, i, 0x616970);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const int z = u(rng) < e_known ? 1 : 0;
      const double pq = z == 1 ? 0.3 + true_tau : 0.3;
      const double q = u(rng) < pq ? 1.0 : 0.0;
      const double w = (static_cast<double>(z) - e_known) /
                       (e_known * (1.0 - e_known));
      const double gamma =
          0.0 + w * (q - mu_wrong - (static_cast<double>(z) - e_known) * 0.0);
      sum += gamma;
    }
    rep_means.push_back(sum / static_cast<double>(n));
  }
  const double grand = mean(rep_means);
  const double se =
      std::sqrt(variance(rep_means) / static_cast<double>(reps));
  const bool ok =
      std::abs(grand - true_tau) <= 3.0 * se && t.seconds() < 300.0;
  report(7, "AIPW double robustness", ok, t.seconds(),
         "mean(Gamma) over 50 reps = " + fmt(grand) + " (truth " +
             fmt(true_tau) + "), SE = " + fmt(se));
}

// ---- 8. dominance-test calibration ---------------------------------------

void criterion8() {
  Timer t;
  // Size under the exchangeable null: both arms draw d from one integer
  // distribution.
  std::size_t rejects = 0;
  const std::size_t size_reps = 400;
  for (std::size_t r = 0; r < size_reps; ++r) {
    CollapsedSample s;
    s.x = Matrix(300, 0);
    auto rng = make_rng(8100 + r, 0, 0x6e756c6c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < 300; ++i) {
      const int z = u(rng) < 0.5 ? 1 : 0;
      s.z_tilde.push_back(z);
      (z == 1 ? s.n1 : s.n0)++;
      s.d.push_back(std::floor(u(rng) * 4.0));
      s.y.push_back(0.0);
      s.parent_indices.push_back(i);
    }
    if (s.n1 == 0 || s.n0 == 0) continue;
    if (ks_dominance_test(s, 199, 9100 + r).p_value <= 0.05) ++rejects;
  }
  const double size =
      static_cast<double>(rejects) / static_cast<double>(size_reps);

  // Power on a crossing DGP: the z~=1 arm is shifted down so F1 > F0.
  std::size_t power_rejects = 0;
  const std::size_t power_reps = 200;
  for (std::size_t r = 0; r < power_reps; ++r) {
    CollapsedSample s;
    s.x = Matrix(5000, 0);
    auto rng = make_rng(8200 + r, 0, 0x63726f73);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < 5000; ++i) {
      const int z = u(rng) < 0.5 ? 1 : 0;
      s.z_tilde.push_back(z);
      (z == 1 ? s.n1 : s.n0)++;
      s.d.push_back(g(rng) - (z == 1 ? 0.12 : 0.0));
      s.y.push_back(0.0);
      s.parent_indices.push_back(i);
    }
    if (ks_dominance_test(s, 199, 9200 + r).p_value <= 0.05) ++power_rejects;
  }
  const double power =
      static_cast<double>(power_rejects) / static_cast<double>(power_reps);
  const bool ok = size >= 0.025 && size <= 0.075 && power >= 0.90 &&
                  t.seconds() < 300.0;
  report(8, "dominance-test calibration", ok, t.seconds(),
         "size at alpha=0.05: " + fmt(100 * size) + "% (400 reps); power: " +
             fmt(100 * power) + "% (crossing DGP, n=5000)");
}

// ---- 9. CLI determinism ---------------------------------------------------

std::string run_cli_capture(const std::string& args, int* exit_code) {
  const std::string cmd =
      std::string(CCACR_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    *exit_code = -1;
    return {};
  }
  std::string out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.append(buf.data(), got);
  const int status = pclose(pipe);
  *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

void criterion9() {
  Timer t;
  namespace fs = std::filesystem;
  const std::string csv =
      (fs::temp_directory_path() / "ccacr_accept_fixture.csv").string();
  {
    std::ofstream f(csv);
    f << "y,d,z1,z2,south,x2,x3,x4\n";
    auto rng = make_rng(4321);
    std::bernoulli_distribution half(0.5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      const int z1 = half(rng) ? 1 : 0;
      const int z2 = half(rng) ? 1 : 0;
      const int zt = (z1 && z2) ? 1 : 0;
      const int c = half(rng) ? 1 : 0;
      const int d = (c && zt) ? 1 : 0;
      const double y = 2.0 * d + g(rng);
      f << y << "," << d << "," << z1 << "," << z2;
      for (int j = 0; j < 4; ++j) f << "," << (half(rng) ? 1 : 0);
      f << "\n";
    }
  }
  const std::string data = "--input " + csv +
                           " --instruments z1,z2 --covariates south,x2,x3,x4";
  const std::vector<std::string> commands = {
      "estimate " + data + " --seed 5",
      "decompose " + data + " --seed 5",
      "ks-test " + data + " --resamples 500 --seed 5",
      "dml " + data +
          " --folds 2 --splits 2 --seed 5 --learner-y forest:trees=40,minleaf=15"
          " --learner-d forest:trees=40,minleaf=15 --learner-z mean",
      "lim-test " + data + " --learner forest:trees=40,minleaf=15 --seed 5",
      "simulate --scenario lim-violated --reps 2 --n 400 "
      "--learner forest:trees=40,minleaf=15 --seed 5",
      "types --levels 3 --instruments 2 --rule lim --seed 5",
      "binarize --input " + csv + " --column y --seed 5",
  };
  bool ok = true;
  std::string first_bad;
  for (const auto& cmd : commands) {
    std::string ref;
    for (int threads : {1, 4, 8, 1}) {  // repeat 1 to also test re-run
      int code = -1;
      const std::string out = run_cli_capture(
          cmd + " --format json --threads " + std::to_string(threads), &code);
      if (code != 0 || (!ref.empty() && out != ref)) {
        ok = false;
        if (first_bad.empty())
          first_bad = cmd.substr(0, cmd.find(' ')) +
                      (code != 0 ? " (exit " + std::to_string(code) + ")"
                                 : " (bytes differ)");
      }
      if (ref.empty()) ref = out;
    }
  }
  report(9, "CLI determinism", ok, t.seconds(),
         ok ? "all 8 subcommands byte-identical across threads {1,4,8}"
            : "mismatch in subcommand " + first_bad);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (g_failures > 0) {
    std::printf("%d of 9 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
