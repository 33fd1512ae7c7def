// End-to-end checks of the command-line tool: exit codes, text output,
// JSON schema conformance and byte-level reproducibility.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ccacr/common.hpp"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CCACR_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Fixture CSV: y = d exactly, two binary instruments, four binary
/// covariates, some mixed-instrument rows.
std::string fixture_csv() {
  static std::string path;
  if (!path.empty()) return path;
  path = (fs::temp_directory_path() / "ccacr_cli_fixture.csv").string();
  std::ofstream f(path);
  f << "y,d,z1,z2,south,x2,x3,x4\n";
  auto rng = ccacr::make_rng(1234);
  std::bernoulli_distribution half(0.5);
  std::bernoulli_distribution comp(0.5);
  for (int i = 0; i < 400; ++i) {
    const int z1 = half(rng) ? 1 : 0;
    const int z2 = half(rng) ? 1 : 0;
    const int zt = (z1 == 1 && z2 == 1) ? 1 : 0;
    const int d = (comp(rng) && zt) ? 1 : 0;
    f << d << "," << d << "," << z1 << "," << z2;
    for (int j = 0; j < 4; ++j) f << "," << (half(rng) ? 1 : 0);
    f << "\n";
  }
  return path;
}

std::string continuous_csv() {
  static std::string path;
  if (!path.empty()) return path;
  path = (fs::temp_directory_path() / "ccacr_cli_cont.csv").string();
  std::ofstream f(path);
  f << "score\n";
  for (int i = 0; i < 100; ++i) f << i * 0.5 << "\n";
  return path;
}

/// Minimal structural validator: type, required, properties, items.
void check_schema(const json& schema, const json& value,
                  const std::string& where) {
  INFO("at ", where);
  if (schema.contains("type")) {
    const std::string t = schema["type"];
    if (t == "object") REQUIRE(value.is_object());
    if (t == "array") REQUIRE(value.is_array());
    if (t == "string") REQUIRE(value.is_string());
    if (t == "boolean") REQUIRE(value.is_boolean());
    if (t == "integer") REQUIRE(value.is_number_integer());
    if (t == "number") REQUIRE(value.is_number());
  }
  if (schema.contains("required")) {
    for (const auto& key : schema["required"]) {
      INFO("missing key ", key.get<std::string>());
      REQUIRE(value.contains(key.get<std::string>()));
    }
  }
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items())
      if (value.contains(key)) check_schema(sub, value[key], where + "." + key);
  }
  if (schema.contains("items") && value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i)
      check_schema(schema["items"], value[i],
                   where + "[" + std::to_string(i) + "]");
  }
}

json run_json_checked(const std::string& args, const std::string& schema_name) {
  RunResult r = run_cli(args + " --format json");
  REQUIRE(r.exit_code == 0);
  json rep = json::parse(r.out);
  std::ifstream sf(std::string(CCACR_SCHEMA_DIR) + "/" + schema_name +
                   ".schema.json");
  REQUIRE(sf.good());
  json schema = json::parse(sf);
  check_schema(schema, rep, schema_name);
  // Spec invariant: identical flags give byte-identical JSON.
  RunResult again = run_cli(args + " --format json");
  CHECK(again.out == r.out);
  return rep;
}

std::string data_flags() {
  return "--input " + fixture_csv() +
         " --instruments z1,z2 --covariates south,x2,x3,x4";
}

}  // namespace

TEST_CASE("usage errors exit 2, data errors exit 1") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("estimate").exit_code == 2);  // missing required options
  CHECK(run_cli("estimate --input /no/such.csv --instruments z1")
            .exit_code == 1);
  // Constant treatment: precondition error from the library.
  const std::string p = (fs::temp_directory_path() / "ccacr_const.csv").string();
  {
    std::ofstream f(p);
    f << "y,d,z1\n1,1,0\n2,1,1\n3,1,0\n4,1,1\n";
  }
  CHECK(run_cli("estimate --input " + p + " --instruments z1").exit_code == 1);
}

TEST_CASE("estimate on the identity-outcome fixture gives beta 1") {
  RunResult r = run_cli("estimate " + data_flags());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("beta        1\n") != std::string::npos);

  json rep = run_json_checked("estimate " + data_flags(), "estimate");
  CHECK(rep["beta"].get<double>() == doctest::Approx(1.0));
  CHECK(rep["command"] == "estimate");
  CHECK(rep["dropped_intermediate_rows"].get<int>() > 0);
  CHECK(rep["margin_weights"]["lim_consistent"].get<bool>());
}

TEST_CASE("types counts match the enumeration") {
  RunResult r = run_cli("types --levels 3 --instruments 2 --rule lim");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "54\n");
  json rep =
      run_json_checked("types --levels 3 --instruments 2 --rule lim", "types");
  CHECK(rep["total"].get<int>() == 81);
  CHECK(rep["allowed"].get<int>() == 54);
  CHECK(run_cli("types --rule pm --format json").exit_code == 0);
  CHECK(run_cli("types --rule wrong").exit_code == 1);
}

TEST_CASE("decompose, ks-test, dml and lim-test emit valid reports") {
  json dec = run_json_checked("decompose " + data_flags(), "decompose");
  double mu_sum = 0.0;
  for (const auto& m : dec["mu"]) mu_sum += m.get<double>();
  CHECK(mu_sum == doctest::Approx(1.0).epsilon(1e-9));

  json ks = run_json_checked("ks-test " + data_flags() + " --resamples 200",
                             "ks-test");
  CHECK(ks["p_value"].get<double>() > 0.0);

  json dml = run_json_checked(
      "dml " + data_flags() +
          " --folds 2 --splits 1 --learner-y mean --learner-d mean "
          "--learner-z mean",
      "dml");
  CHECK(std::abs(dml["beta"].get<double>() - 1.0) < 1e-8);

  json lim = run_json_checked(
      "lim-test " + data_flags() + " --learner forest:trees=50,minleaf=15",
      "lim-test");
  CHECK(lim["margins"].size() == 1);
}

TEST_CASE("simulate and binarize emit valid reports") {
  json sim = run_json_checked(
      "simulate --scenario lim-valid --reps 1 --n 400 "
      "--learner forest:trees=40,minleaf=15",
      "simulate");
  CHECK(sim["reps"].get<int>() == 1);
  CHECK(sim["margins"].size() == 2);

  json bin = run_json_checked(
      "binarize --input " + continuous_csv() + " --column score", "binarize");
  CHECK(bin["kept"].get<int>() > 0);
  CHECK(bin["masked"].get<int>() > 0);
  CHECK(bin["low_cutoff"].get<double>() < bin["high_cutoff"].get<double>());
}

TEST_CASE("--output writes the report to a file") {
  const std::string out =
      (fs::temp_directory_path() / "ccacr_out.json").string();
  RunResult r = run_cli("estimate " + data_flags() +
                        " --format json --output " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  std::ifstream f(out);
  REQUIRE(f.good());
  json rep = json::parse(f);
  CHECK(rep["command"] == "estimate");
}
