#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatflow/alexandrov.hpp"
#include "flatflow/grid.hpp"
#include "flatflow/oracle.hpp"
#include "flatflow/step.hpp"

namespace flatflow {

/// Scenario description parsed from flat `key=value` text. Blank lines and
/// lines starting with '#' are ignored; keys carry dotted section prefixes.
///
/// Keys (required ones marked *):
///   grid.dim*, grid.shape* (comma list, one entry per axis), grid.spacing*,
///   grid.origin (comma list; default centres the grid),
///   shape.kind* (ball, ball_union, cube, dumbbell, noisy_ball, raster),
///   shape.centers (points separated by ';', coordinates by ','),
///   shape.radii, shape.side, shape.neck_width, shape.noise_amplitude,
///   shape.noise_modes, shape.volume, shape.path (raster file),
///   flow.h*, flow.horizon*, flow.snapshot_stride, flow.target_volume,
///   step.band_width, step.exact_limit,
///   diagnostics.times (comma list), output.dir, seed, tolerances.delta.
///
/// For shape.kind=raster the grid comes from the file and grid.* keys are
/// optional; when given they must agree with it.
struct ScenarioConfig {
  /// Every key and its raw value text, in file order.
  std::vector<std::pair<std::string, std::string>> entries;
  /// Directory of the config file; relative paths resolve against it.
  std::string base_dir;

  std::optional<GridSpec> grid;
  std::string shape_kind;
  ShapeParams shape;
  std::string raster_path;

  double h = 0.0;
  double horizon = 0.0;
  int snapshot_stride = 1;
  std::optional<double> target_volume;
  StepOptions step;

  std::vector<double> diagnostic_times;
  std::string output_dir;
  std::uint64_t seed = 0;
  double delta = 0.5;
};

/// Parses config text. Throws Error(ConfigError) for malformed lines,
/// duplicate or unknown keys, missing required keys and invalid values.
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");

/// Reads and parses a file. Throws Error(ConfigError) when it cannot be read.
ScenarioConfig load_config(const std::string& path);

/// Builds the initial set from the shape block. Throws Error(ConfigError)
/// when the shape or raster is invalid.
GridSet initial_set(const ScenarioConfig& config);

}  // namespace flatflow
