#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apperf/cli.hpp"
#include "apperf/data.hpp"
#include "test_util.hpp"

using namespace apperf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "apperf_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string metric(const char* name) { return apperf::testing::metric_path(name); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("check prints grids") {
  Run r = run({"check", "--metric", metric("f1"), "--n", "4"});
  REQUIRE(r.code == kExitOk);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  CHECK(line == "metric f1");
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  auto slope = std::find(lines.begin(), lines.end(), "slope");
  auto inter = std::find(lines.begin(), lines.end(), "inter");
  REQUIRE(slope != lines.end());
  REQUIRE(inter != lines.end());
  CHECK(inter - slope == 6);
  CHECK(lines.end() - inter == 6);
}

TEST_CASE("solve matching pennies") {
  fs::path psi = scratch("psi.txt"), y = scratch("y.txt"), dump = scratch("game.lp");
  write(psi, "0\n");
  write(y, "1\n");
  Run r = run({"solve", "--potentials", psi.string(), "--labels", y.string(), "--metric",
               metric("accuracy"), "--solver", "lp", "--dump-lp", dump.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("objective,0.5\n", 0) == 0);
  CHECK(r.out.find("solver,lp") != std::string::npos);
  CHECK(r.out.find("sample,psi,label,q_marginal,gradient\n0,0,1,0.5,-0.5") != std::string::npos);
  std::ifstream f(dump);
  std::string first;
  std::getline(f, first);
  CHECK(first == "vars 3 rows 3");
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"check", "--metric", metric("f1")}).code == kExitUsage);
  CHECK(run({"check", "--metric", metric("f1"), "--n", "0"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);

  fs::path bad = scratch("bad.apm");
  write(bad, "broken { define: tp + }\n");
  Run parse = run({"check", "--metric", bad.string(), "--n", "3"});
  CHECK(parse.code == kExitData);
  CHECK(parse.err.find("error") != std::string::npos);

  CHECK(run({"eval", "--data", "/nonexistent.csv", "--model", "/nonexistent.json",
             "--metrics", metric("f1")})
            .code == kExitData);

  fs::path psi = scratch("psi3.txt"), y = scratch("y3.txt");
  write(psi, "psi\n0.1\n-0.2\n0.3\n");
  write(y, "1\n0\n2\n");
  CHECK(run({"solve", "--potentials", psi.string(), "--labels", y.string(), "--metric",
             metric("f1")})
            .code == kExitData);

  // A constraint no distribution can meet leaves the game LP infeasible.
  fs::path impossible = scratch("impossible.apm");
  write(impossible,
        "impossible {\n  define: tp / pp\n  constraint: tp / ap >= 2\n"
        "  special_case_positive\n  cs_special_case_positive(1)\n}\n");
  write(y, "1\n0\n1\n");
  Run inf = run({"solve", "--potentials", psi.string(), "--labels", y.string(), "--metric",
                 impossible.string()});
  CHECK(inf.code == kExitSolver);
  CHECK(inf.err.find("infeasible") != std::string::npos);
}

TEST_CASE("train then eval reproduces the test metric") {
  fs::path data = scratch("synth.csv"), model = scratch("model.json"),
           hist = scratch("hist.csv");
  REQUIRE(run({"synth", "--out", data.string(), "--samples", "200", "--positive-fraction",
               "0.2", "--seed", "3"})
              .code == kExitOk);
  std::vector<std::string> args = {"train", "--data", data.string(), "--metric", metric("f2"),
                                   "--model", "linear", "--epochs", "3", "--lr", "0.01",
                                   "--seed", "5", "--out", model.string(),
                                   "--history", hist.string()};
  Run tr = run(args);
  REQUIRE(tr.code == kExitOk);
  auto j = nlohmann::json::parse(tr.out);
  CHECK(j["sizes"]["train"] == 112);
  CHECK(j["sizes"]["test"] == 60);
  CHECK(j["split_seed"] == 5);
  double test_f2 = j["test"]["f2"];

  Run again = run(args);
  CHECK(again.out == tr.out);

  Run ev = run({"eval", "--data", data.string(), "--model", model.string(), "--metrics",
                metric("f2"), metric("accuracy"), "--split-seed", "5"});
  REQUIRE(ev.code == kExitOk);
  auto e = nlohmann::json::parse(ev.out);
  CHECK(e["f2"].get<double>() == test_f2);
  CHECK(e.contains("accuracy"));

  std::ifstream h(hist);
  std::string header;
  std::getline(h, header);
  CHECK(header == "epoch,train_loss,val_metric");
  int rows = 0;
  for (std::string line; std::getline(h, line);) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("eval without a split applies the stored standardization") {
  fs::path data = scratch("synth2.csv"), model = scratch("model2.json");
  REQUIRE(run({"synth", "--out", data.string(), "--samples", "100", "--seed", "1"}).code ==
          kExitOk);
  REQUIRE(run({"train", "--data", data.string(), "--val", data.string(), "--metric",
               metric("accuracy"), "--model", "linear", "--epochs", "1", "--objective", "bce",
               "--out", model.string()})
              .code == kExitOk);
  Run ev = run({"eval", "--data", data.string(), "--model", model.string(), "--metrics",
                metric("accuracy")});
  REQUIRE(ev.code == kExitOk);
  double acc = nlohmann::json::parse(ev.out)["accuracy"];
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

}  // TEST_SUITE
