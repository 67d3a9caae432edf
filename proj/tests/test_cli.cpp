#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"
#include "flatflow/io.hpp"

using namespace flatflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "flatflow_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kBall = R"(grid.dim=2
grid.shape=96,96
grid.spacing=0.03125
shape.kind=ball
shape.centers=0.03,0
shape.radii=1
flow.h=0.01
flow.horizon=0.095
flow.snapshot_stride=1
diagnostics.times=0.05
seed=0
)";

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "flatflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

}  // namespace

TEST_CASE("flow then verify round trip, config echo and row count") {
  const auto dir = scratch("ball");
  write_text((dir / "ball.cfg").string(), kBall);
  REQUIRE(run({"flow", (dir / "ball.cfg").string(), "--out", (dir / "out").string()}) == 0);

  const CsvTable t = read_csv((dir / "out" / "trace.csv").string());
  int steps = 0;
  for (const auto& row : t.rows) steps += row[0] != "0";
  CHECK(steps == 10);

  const auto meta = nlohmann::json::parse(read_text((dir / "out" / "metadata.json").string()));
  std::istringstream cfg(kBall);
  std::string line;
  int keys = 0;
  while (std::getline(cfg, line)) {
    const auto eq = line.find('=');
    CHECK(meta["config"][line.substr(0, eq)].get<std::string>() == line.substr(eq + 1));
    ++keys;
  }
  CHECK(meta["config"].size() == static_cast<std::size_t>(keys));
  CHECK(meta["snapshots"].size() == 11);
  CHECK(meta["diagnostics"][0]["N"] == 1);
  CHECK(fs::exists(dir / "out" / "diagnostics" / "k_000005.report.json"));

  std::string text;
  CHECK(run({"verify", (dir / "out").string()}, &text) == 0);
  const auto audit = nlohmann::json::parse(read_text((dir / "out" / "audit.json").string()));
  CHECK(audit["ok"] == true);
  CHECK(audit["violations"].empty());
  CHECK(audit.contains("continuity"));
  CHECK(audit.contains("multiplier"));

  // Tampering with one perimeter value is caught.
  std::string csv = read_text((dir / "out" / "trace.csv").string());
  CsvTable tt = read_csv((dir / "out" / "trace.csv").string());
  const std::string& p = tt.rows[4][3];
  csv.replace(csv.find(p), p.size(), format_double(parse_double(p) * 1.001));
  write_text((dir / "out" / "trace.csv").string(), csv);
  CHECK(run({"verify", (dir / "out").string()}, &text) == 3);
  CHECK(text.find("perimeter") != std::string::npos);
  const auto bad = nlohmann::json::parse(read_text((dir / "out" / "audit.json").string()));
  CHECK(bad["ok"] == false);
  CHECK_FALSE(bad["violations"].empty());
}

TEST_CASE("flow exit codes") {
  const auto dir = scratch("codes");
  std::string big = kBall;
  big.replace(big.find("flow.h=0.01"), 11, "flow.h=0.3");
  write_text((dir / "big.cfg").string(), big);
  std::string text;
  CHECK(run({"flow", (dir / "big.cfg").string()}, &text) == 2);
  CHECK(text.find("h < (ω/P)²") != std::string::npos);
  CHECK(run({"flow", (dir / "missing.cfg").string()}) == 1);
  write_text((dir / "typo.cfg").string(), std::string(kBall) + "flow.hh=1\n");
  CHECK(run({"flow", (dir / "typo.cfg").string()}) == 1);
  CHECK(run({}) == 1);
  CHECK(run({"frobnicate"}) == 1);
}

TEST_CASE("verify on an empty directory") {
  CHECK(run({"verify", scratch("empty").string()}) == 1);
}

TEST_CASE("diagnose rasters and configs") {
  const auto dir = scratch("diag");
  const std::string three = R"(grid.dim=2
grid.shape=500,500
grid.spacing=0.0090210979560879
shape.kind=ball_union
shape.centers=-1.2,-0.7;1.2,-0.7;0,1.4
shape.radii=0.57735026918962573
flow.h=0.01
flow.horizon=1
)";
  write_text((dir / "three.cfg").string(), three);
  std::string text;
  REQUIRE(run({"diagnose", (dir / "three.cfg").string()}, &text) == 0);
  const auto rep = nlohmann::json::parse(read_text((dir / "three_diagnosis" / "report.json").string()));
  CHECK(rep["N"] == 3);
  CHECK(fs::exists(dir / "three_diagnosis" / "montiel_ros.csv"));

  const std::string cube = R"(grid.dim=2
grid.shape=128,128
grid.spacing=0.03125
shape.kind=cube
shape.side=2
flow.h=0.01
flow.horizon=1
)";
  write_text((dir / "cube.cfg").string(), cube);
  REQUIRE(run({"diagnose", (dir / "cube.cfg").string(), "--out", (dir / "c").string()}) == 0);
  const auto crep = nlohmann::json::parse(read_text((dir / "c" / "report.json").string()));
  CHECK(crep["epsilon"].get<double>() > 0.5);
  CHECK(crep["status"] == "outside theorem hypothesis");

  REQUIRE(run({"diagnose", (dir / "cube.cfg").string(), "--lambda", "1", "--out",
               (dir / "c1").string()}) == 0);
  const auto c1 = nlohmann::json::parse(read_text((dir / "c1" / "report.json").string()));
  CHECK(c1["lambda_hat"] == 1.0);

  const GridSet empty(GridSpec::centered(2, {32, 32, 1}, 0.0625));
  write_raster((dir / "empty.pgm").string(), empty);
  CHECK(run({"diagnose", (dir / "empty.pgm").string()}, &text) == 1);
  CHECK(text.find("EmptySet") != std::string::npos);
  CHECK(run({"diagnose", (dir / "nothing.pgm").string()}) == 1);
}

TEST_CASE("oracle balls") {
  std::string text;
  CHECK(run({"oracle", "balls", "--radii", "0.8,0.6", "--n", "1", "--horizon", "0.01", "--dt",
             "0.005"},
            &text) == 0);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,r1,r2,lambda");
  std::getline(in, line);
  CHECK(line == "0,0.80000000000000004,0.59999999999999998,1.4285714285714286");
  const auto dir = scratch("oracle");
  CHECK(run({"oracle", "balls", "--radii", "0.8,0.6", "--n", "1", "--out",
             (dir / "o.csv").string()}) == 0);
  CHECK(read_csv((dir / "o.csv").string()).rows.size() > 100);
  CHECK(run({"oracle", "balls", "--radii", "-1", "--n", "1"}) == 1);
  CHECK(run({"oracle", "balls", "--n", "1"}) == 1);
}
