#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kpplab-cli-test-" + name);
  fs::remove_all(p);
  return p;
}

/// Runs the CLI with `args`, writing artifacts to `out`; returns the exit status.
int run(const std::string& args, const fs::path& out = {}) {
  std::string cmd = std::string(KPPLAB_CLI) + " " + args;
  if (!out.empty()) cmd += " -o " + out.string();
  cmd += " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("mean on a constant path") {
  const auto out = scratch("mean");
  CHECK(run("mean --set path.a=1.7 --set horizon=0,50", out) == 0);
  const auto j = json::parse(slurp(out / "mean.json"));
  CHECK(j["command"] == "mean");
  CHECK(j["verdict"] == "confirmed");
  CHECK(j["version"].get<std::string>().size() > 0);
  CHECK(j["seed"] == "1");
  for (const char* k : {"a_inf", "a_hat", "a_sup"}) CHECK(j["result"][k].get<double>() == doctest::Approx(1.7));
  const std::string csv = slurp(out / "path.csv");
  CHECK(csv.rfind("# kpplab ", 0) == 0);
  CHECK(csv.find("seed=1") != std::string::npos);
  CHECK(fs::exists(out / "config.txt"));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("mean") == 2);                                   // mean has no default horizon
  CHECK(run("mean --set horizon=5,5") == 2);                 // zero-length horizon
  CHECK(run("mean --set horizon=0,50 --set no.such=1") == 2);
  CHECK(run("mean --set horizon=0,50 --set path.a=abc") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--list-keys") == 0);
  CHECK(run("--version") == 0);
}

TEST_CASE("runtime failures exit with 1") {
  // A grid this short lets the front reach the safety margin.
  CHECK(run("takeover --set horizon=0,60 --set grid.x_lo=-60 --set grid.x_hi=60") == 1);
}

TEST_CASE("verdict exit codes") {
  const auto out = scratch("verdicts");
  CHECK(run("takeover --set horizon=0,40 --set grid.x_hi=200", out) == 3);
  CHECK(json::parse(slurp(out / "takeover.json"))["verdict"] == "inconclusive");
  // Equality at t = 0 leaves no room below zero slack.
  CHECK(run("stability --set stability.slack=-0.1", out) == 4);
  CHECK(json::parse(slurp(out / "stability.json"))["verdict"] == "violated");
  CHECK(run("stability", out) == 0);
}

TEST_CASE("artifacts do not depend on the thread count") {
  const std::string interval =
      "interval --set grid.x_lo=-50 --set grid.x_hi=250 --set interval.t_probe=40 --set interval.shift_count=3";
  const auto a = scratch("j1"), b = scratch("j4");
  CHECK(run(interval + " -j 1", a) == run(interval + " -j 4", b));
  CHECK(slurp(a / "interval.json") == slurp(b / "interval.json"));

  const std::string sweep =
      "sweep --set path.kind=equilibrium --set horizon=0,30 --set grid.x_hi=150 --set sweep.seeds=3,1,2";
  const auto c = scratch("s1"), d = scratch("s4");
  CHECK(run(sweep + " -j 1", c) == run(sweep + " -j 4", d));
  const std::string s1 = slurp(c / "sweep.json");
  CHECK(s1 == slurp(d / "sweep.json"));
  const auto j = json::parse(s1);
  REQUIRE(j["result"]["cells"].size() == 3);
  CHECK(j["result"]["cells"][0]["seed"] == "1");

  const std::string takeover = "takeover --set horizon=0,30 --set grid.x_hi=150";
  const auto e = scratch("t1"), f = scratch("t4");
  run(takeover + " -j 1", e);
  run(takeover + " -j 4", f);
  const std::string fronts = slurp(e / "fronts.csv");
  CHECK(fronts.size() > 0);
  CHECK(fronts == slurp(f / "fronts.csv"));
}
