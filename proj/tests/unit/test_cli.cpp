#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = AHB_CLI_PATH;
const std::string kFixtures = AHB_FIXTURES_DIR;

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ahb-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

int run(const std::string& args, const std::string& log) {
  const std::string cmd = "'" + kCli + "' " + args + " > '" + log + "' 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::vector<std::string> lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::string small_fast(const std::string& out) {
  return "match --data " + fixture("small.csv") + " --train " + fixture("train.csv") + " --schema " +
         fixture("schema.json") + " --solver fast --seed 3 --trees 30 --out-dir " + out;
}

}  // namespace

TEST_CASE("fast smoke run writes every artifact") {
  const auto dir = scratch("smoke");
  REQUIRE(run(small_fast(dir + "/a"), dir + "/log") == 0);
  for (const char* f : {"boxes.csv", "groups.csv", "estimates.csv", "errors.csv", "run-manifest.json"}) {
    CHECK(fs::exists(dir + "/a/" + f));
  }
  CHECK(lines(dir + "/a/estimates.csv").size() == 7);
  CHECK(lines(dir + "/a/boxes.csv").front() == "owner_id,covariate_name,lower,upper");
  const auto manifest = nlohmann::json::parse(slurp(dir + "/a/run-manifest.json"));
  CHECK(manifest["command"] == "match");
  CHECK(manifest["seed"] == 3);

  REQUIRE(run(small_fast(dir + "/b"), dir + "/log") == 0);
  for (const char* f : {"boxes.csv", "groups.csv", "estimates.csv"}) {
    CHECK(slurp(dir + "/a/" + f) == slurp(dir + "/b/" + f));
  }
}

TEST_CASE("manifest replay with other worker counts is byte-identical") {
  const auto dir = scratch("replay");
  REQUIRE(run(small_fast(dir + "/first"), dir + "/log") == 0);
  for (int workers : {2, 5}) {
    const auto again = dir + "/w" + std::to_string(workers);
    REQUIRE(run("match --manifest " + dir + "/first/run-manifest.json --workers " + std::to_string(workers) +
                    " --out-dir " + again,
                dir + "/log") == 0);
    for (const char* f : {"boxes.csv", "groups.csv", "estimates.csv", "errors.csv"}) {
      CHECK(slurp(dir + "/first/" + f) == slurp(again + "/" + f));
    }
  }
}

TEST_CASE("verify-oracle records agreement in the manifest") {
  const auto dir = scratch("oracle");
  REQUIRE(run("match --data " + fixture("tiny.csv") + " --predictor external:" + fixture("tiny_predictions.csv") +
                  " --schema " + fixture("schema.json") + " --solver mip --m 1 --verify-oracle --out-dir " + dir,
              dir + ".log") == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir + "/run-manifest.json"));
  CHECK(manifest["results"]["oracle_agreement"] == true);
}

TEST_CASE("withheld outcomes give the same boxes") {
  const auto dir = scratch("withheld");
  const auto common = " --train " + fixture("train.csv") + " --schema " + fixture("schema_optional_outcome.json") +
                      " --variant none --seed 11 --trees 30";
  REQUIRE(run("match --data " + fixture("small_no_outcome.csv") + common + " --out-dir " + dir + "/blind",
              dir + "/log") == 0);
  REQUIRE(run("match --data " + fixture("small.csv") + common + " --out-dir " + dir + "/full", dir + "/log") == 0);
  CHECK(slurp(dir + "/blind/boxes.csv") == slurp(dir + "/full/boxes.csv"));
  CHECK(slurp(dir + "/blind/groups.csv") == slurp(dir + "/full/groups.csv"));

  CHECK(run("match --data " + fixture("small_no_outcome.csv") + " --train " + fixture("train.csv") + " --schema " +
                fixture("schema_optional_outcome.json") + " --out-dir " + dir + "/est",
            dir + "/log") == 2);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  const auto log = dir + "/log";
  CHECK(run("match --data " + fixture("controls_only.csv") + " --train " + fixture("train.csv") + " --schema " +
                fixture("schema.json") + " --variant tau_b --out-dir " + dir + "/tb",
            log) == 2);
  CHECK(slurp(log).find("treated") != std::string::npos);
  CHECK(run("match --data " + fixture("small.csv") + " --schema " + fixture("schema.json") + " --m 0 --out-dir " +
                dir + "/m0",
            log) == 2);
  CHECK(run("match --data " + fixture("tiny.csv") + " --predictor external:" + fixture("tiny_predictions.csv") +
                " --schema " + fixture("schema.json") + " --m 50 --out-dir " + dir + "/inf",
            log) == 3);
  CHECK(fs::exists(dir + "/inf/errors.csv"));
  CHECK(run("match --data " + dir + "/missing.csv --schema " + fixture("schema.json") + " --out-dir " + dir + "/io",
            log) == 4);
  CHECK(run("match --data " + fixture("small.csv") + " --predictor oracle --schema " + fixture("schema.json") +
                " --out-dir " + dir + "/or",
            log) == 2);
}

TEST_CASE("simulation study writes one row per scenario, method and replicate") {
  const auto dir = scratch("study");
  write(dir + "/study.json",
        R"({"scenarios": [{"name": "nc", "dgp": {"g": "None", "h": "Const", "n": 100}}],
            "methods": ["mip", "fast", "naive"], "replicates": 2, "seed": 1})");
  REQUIRE(run("simulate --config " + dir + "/study.json --out-dir " + dir + "/out", dir + "/log") == 0);
  const auto rows = lines(dir + "/out/results.csv");
  REQUIRE(rows.size() == 7);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(fields(rows[k]).back() != "error");
    CHECK(fields(rows[k])[0] == "nc");
  }
  CHECK(fs::exists(dir + "/out/summary.csv"));

  write(dir + "/bogus.json", R"({"scenarios": [{"name": "a", "dgp": {}}], "methods": ["bogus"]})");
  CHECK(run("simulate --config " + dir + "/bogus.json --out-dir " + dir + "/bad", dir + "/log") == 2);
}

TEST_CASE("intervals are ordered and the normal interval holds the estimate") {
  const auto dir = scratch("intervals");
  write(dir + "/dgp.json", R"({"g": "Linear", "h": "Const", "p_c": 2, "n": 240, "seed": 5})");
  REQUIRE(run("intervals --simulate " + dir + "/dgp.json --predictor oracle --m 4 --method subsample na_conservative"
              " --level 0.9 --resamples 60 --seed 2 --out-dir " + dir + "/out",
              dir + "/log") == 0);
  std::map<std::string, double> ite;
  const auto est = lines(dir + "/out/estimates.csv");
  for (std::size_t k = 1; k < est.size(); ++k) {
    const auto f = fields(est[k]);
    if (!f[2].empty()) ite[f[0]] = std::stod(f[2]);
  }
  const auto iv = lines(dir + "/out/intervals.csv");
  REQUIRE(iv.size() > 1);
  CHECK(iv.front() == "unit_id,method,level,lower,upper");
  std::size_t checked = 0;
  for (std::size_t k = 1; k < iv.size(); ++k) {
    const auto f = fields(iv[k]);
    const double lo = std::stod(f[3]), hi = std::stod(f[4]);
    CHECK(lo <= hi);
    if (f[1] == "na_conservative" && ite.count(f[0])) {
      CHECK(lo <= ite[f[0]]);
      CHECK(ite[f[0]] <= hi);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("tune with a one-point grid") {
  const auto dir = scratch("tune");
  write(dir + "/grid.json", R"([{"beta": 0.5, "m": 1}])");
  REQUIRE(run("tune --data " + fixture("small.csv") + " --train " + fixture("train.csv") + " --schema " +
                  fixture("schema.json") + " --trees 20 --grid " + dir + "/grid.json --out-dir " + dir + "/out",
              dir + "/log") == 0);
  CHECK(lines(dir + "/out/tuning.csv").size() == 2);
  const auto best = nlohmann::json::parse(slurp(dir + "/out/best-options.json"));
  CHECK(best.dump().find("0.5") != std::string::npos);
}
