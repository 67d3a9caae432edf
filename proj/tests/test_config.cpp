#include <doctest.h>

#include <filesystem>

#include "flatflow/config.hpp"
#include "flatflow/error.hpp"
#include "flatflow/geometry.hpp"
#include "flatflow/io.hpp"

using namespace flatflow;

namespace {

const char* kBall = R"(# comment
grid.dim = 2
grid.shape=64,48
grid.spacing=0.0625
shape.kind=ball
shape.centers=0.1,-0.2
shape.radii=1
flow.h=0.01
flow.horizon=0.5
)";

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidGrid;
}

}  // namespace

TEST_CASE("parse a minimal config with defaults") {
  const ScenarioConfig c = parse_config(kBall, "/tmp/base");
  REQUIRE(c.grid);
  CHECK(c.grid->dim == 2);
  CHECK(c.grid->shape == Index3{64, 48, 1});
  CHECK(c.grid->spacing == 0.0625);
  CHECK(c.shape_kind == "ball");
  CHECK(c.shape.centers.size() == 1);
  CHECK(c.shape.centers[0] == Point(0.1, -0.2, 0));
  CHECK(c.shape.radii == std::vector<double>{1.0});
  CHECK(c.h == 0.01);
  CHECK(c.horizon == 0.5);
  CHECK(c.snapshot_stride == 1);
  CHECK_FALSE(c.target_volume);
  CHECK(c.seed == 0);
  CHECK(c.delta == 0.5);
  CHECK(c.output_dir == "/tmp/base/output");
  REQUIRE(c.entries.size() == 8);
  CHECK(c.entries[0] == std::pair<std::string, std::string>{"grid.dim", "2"});
  CHECK(c.entries[2].second == "0.0625");
}

TEST_CASE("raw values are kept verbatim") {
  const std::string text = std::string(kBall) + "flow.target_volume=3.1415926535897931\nseed=7\n" +
                           "diagnostics.times=0.1, 0.25\noutput.dir=/abs/out\n";
  const ScenarioConfig c = parse_config(text);
  CHECK(c.entries.back().second == "/abs/out");
  CHECK(*c.target_volume == 3.1415926535897931);
  CHECK(c.seed == 7);
  CHECK(c.shape.seed == 7);
  CHECK(c.diagnostic_times == std::vector<double>{0.1, 0.25});
  CHECK(c.output_dir == "/abs/out");
  bool found = false;
  for (const auto& [k, v] : c.entries) found |= k == "flow.target_volume" && v == "3.1415926535897931";
  CHECK(found);
}

TEST_CASE("config errors") {
  const std::string base = kBall;
  CHECK(code_of(base + "bogus.key=1\n") == ErrorCode::ConfigError);
  CHECK(code_of(base + "flow.h=0.02\n") == ErrorCode::ConfigError);
  CHECK(code_of(base + "no equals sign\n") == ErrorCode::ConfigError);
  CHECK(code_of("grid.dim=2\n") == ErrorCode::ConfigError);
  CHECK(code_of(base + "flow.snapshot_stride=0\n") == ErrorCode::ConfigError);
  CHECK(code_of(base + "seed=-1\n") == ErrorCode::ConfigError);
  CHECK(code_of(base + "tolerances.delta=abc\n") == ErrorCode::ConfigError);
  std::string bad = kBall;
  bad.replace(bad.find("64,48"), 5, "64");
  CHECK(code_of(bad) == ErrorCode::ConfigError);
  bad = kBall;
  bad.replace(bad.find("kind=ball"), 9, "kind=star");
  CHECK(code_of(bad) == ErrorCode::ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/dir/x.cfg"), Error);
}

TEST_CASE("initial shapes from configs and rasters") {
  const ScenarioConfig c = parse_config(kBall);
  const GridSet set = initial_set(c);
  CHECK(volume(set) == doctest::Approx(3.14159).epsilon(0.02));

  const auto dir = std::filesystem::temp_directory_path() / "flatflow_test_config";
  std::filesystem::create_directories(dir);
  write_raster((dir / "init.pgm").string(), set);
  const ScenarioConfig r = parse_config("shape.kind=raster\nshape.path=init.pgm\nflow.h=0.01\nflow.horizon=1\n",
                                        dir.string());
  CHECK(initial_set(r) == set);

  const ScenarioConfig missing =
      parse_config("shape.kind=raster\nshape.path=none.pgm\nflow.h=0.01\nflow.horizon=1\n", dir.string());
  CHECK_THROWS_AS(initial_set(missing), Error);

  std::string wide = kBall;
  wide.replace(wide.find("radii=1"), 7, "radii=3");
  CHECK_THROWS_AS(initial_set(parse_config(wide)), Error);
}
