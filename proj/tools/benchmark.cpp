// Benchmark: serial (1 thread) versus OpenMP parallel runs of the three
// parallel kernels. The per-work-item RNG streams make results identical
// regardless of the thread count; this tool reports timings and verifies
// that equality.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ccacr/estimators.hpp"
#include "ccacr/learners.hpp"
#include "ccacr/sim.hpp"

using namespace ccacr;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Timed {
  double seconds;
  double checksum;
};

template <typename F>
Timed timed(int threads, F&& f) {
  set_num_threads(threads);
  const double t0 = now_s();
  const double c = f();
  return {now_s() - t0, c};
}

void report(const char* name, const Timed& serial, const Timed& parallel,
            int threads) {
  const bool equal = serial.checksum == parallel.checksum;
  std::printf("%-24s serial %8.3fs  %d threads %8.3fs  speedup %5.2fx  %s\n",
              name, serial.seconds, threads, parallel.seconds,
              serial.seconds / parallel.seconds,
              equal ? "results identical" : "RESULTS DIFFER");
  if (!equal) std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 4;

  // Shared inputs.
  CollapsedSample lin = generate_linear_dgp(20000, 2.0, 42);

  auto forest_run = [&]() {
    FittedModel m = fit_forest(lin.x, lin.y, LearnerSpec::make_forest(200), 7);
    double c = 0.0;
    for (double v : m.oob_predictions) c += v;
    return c;
  };
  report("regression forest", timed(1, forest_run), timed(threads, forest_run),
         threads);

  auto ks_run = [&]() {
    DominanceTest t = ks_dominance_test(lin, 2000, 11);
    return t.statistic + t.p_value;
  };
  report("permutation KS test", timed(1, ks_run), timed(threads, ks_run),
         threads);

  auto mc_run = [&]() {
    ScenarioConfig cfg = builtin_scenario("lim-violated");
    LimTestConfig tc;
    tc.forest.forest.n_trees = 100;
    McReport r = run_monte_carlo(cfg, 8, tc, 3);
    double c = 0.0;
    for (double v : r.reject_rates) c += v;
    return c;
  };
  report("Monte Carlo reps", timed(1, mc_run), timed(threads, mc_run), threads);

  set_num_threads(0);
  return 0;
}
