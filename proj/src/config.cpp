#include "flatflow/config.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "flatflow/error.hpp"
#include "flatflow/io.hpp"

namespace flatflow {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "grid.dim",          "grid.shape",         "grid.spacing",      "grid.origin",
      "shape.kind",        "shape.centers",      "shape.radii",       "shape.side",
      "shape.neck_width",  "shape.noise_amplitude", "shape.noise_modes", "shape.volume",
      "shape.path",        "flow.h",             "flow.horizon",      "flow.snapshot_stride",
      "flow.target_volume", "step.band_width",   "step.exact_limit",  "diagnostics.times",
      "output.dir",        "seed",               "tolerances.delta"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

double number(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const Error&) {
    fail(key + ": not a number: '" + value + "'");
  }
}

long integer(const std::string& key, const std::string& value) {
  try {
    return parse_int(value);
  } catch (const Error&) {
    fail(key + ": not an integer: '" + value + "'");
  }
}

std::vector<double> numbers(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(number(key, item));
  return out;
}

Point point(const std::string& key, const std::string& value) {
  const auto xs = numbers(key, value);
  if (xs.empty() || xs.size() > 3) fail(key + ": expected 1 to 3 coordinates");
  Point p = Point::Zero();
  for (std::size_t a = 0; a < xs.size(); ++a) p[a] = xs[a];
  return p;
}

std::string resolve(const std::string& base, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base) / p).string();
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  ScenarioConfig c;
  c.base_dir = base_dir;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
    if (!known_keys().count(key)) fail("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (kv.count(key)) fail("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = value;
    c.entries.emplace_back(key, value);
  }
  auto has = [&](const char* k) { return kv.count(k) != 0; };
  auto need = [&](const char* k) -> const std::string& {
    if (!has(k)) fail(std::string("missing required key '") + k + "'");
    return kv.at(k);
  };

  if (!has("shape.kind")) fail("missing required key 'shape.kind'");
  c.shape_kind = kv.at("shape.kind");
  static const std::set<std::string> kinds = {"ball", "ball_union", "cube", "dumbbell",
                                               "noisy_ball", "raster"};
  if (!kinds.count(c.shape_kind)) fail("shape.kind: unknown kind '" + c.shape_kind + "'");
  const bool raster = c.shape_kind == "raster";

  if (!raster || has("grid.dim") || has("grid.shape") || has("grid.spacing")) {
    const long dim = integer("grid.dim", need("grid.dim"));
    if (dim != 2 && dim != 3) fail("grid.dim must be 2 or 3");
    const auto shape = numbers("grid.shape", need("grid.shape"));
    if (static_cast<long>(shape.size()) != dim) fail("grid.shape needs one entry per axis");
    Index3 cells{1, 1, 1};
    for (long a = 0; a < dim; ++a) {
      if (shape[a] != static_cast<int>(shape[a])) fail("grid.shape entries must be integers");
      cells[a] = static_cast<int>(shape[a]);
    }
    const double spacing = number("grid.spacing", need("grid.spacing"));
    try {
      if (has("grid.origin")) {
        const auto o = numbers("grid.origin", kv.at("grid.origin"));
        if (static_cast<long>(o.size()) != dim) fail("grid.origin needs one entry per axis");
        Point origin = Point::Zero();
        for (long a = 0; a < dim; ++a) origin[a] = o[a];
        c.grid = GridSpec::make(static_cast<int>(dim), cells, spacing, origin);
      } else {
        c.grid = GridSpec::centered(static_cast<int>(dim), cells, spacing);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      fail(std::string("grid: ") + e.what());
    }
  }

  if (has("shape.centers")) {
    for (const auto& item : split(kv.at("shape.centers"), ';')) {
      c.shape.centers.push_back(point("shape.centers", item));
    }
  }
  if (has("shape.radii")) c.shape.radii = numbers("shape.radii", kv.at("shape.radii"));
  if (has("shape.side")) c.shape.side = number("shape.side", kv.at("shape.side"));
  if (has("shape.neck_width")) c.shape.neck_width = number("shape.neck_width", kv.at("shape.neck_width"));
  if (has("shape.noise_amplitude")) {
    c.shape.noise_amplitude = number("shape.noise_amplitude", kv.at("shape.noise_amplitude"));
  }
  if (has("shape.noise_modes")) {
    c.shape.noise_modes = static_cast<int>(integer("shape.noise_modes", kv.at("shape.noise_modes")));
  }
  if (has("shape.volume")) c.shape.target_volume = number("shape.volume", kv.at("shape.volume"));
  if (raster) c.raster_path = resolve(base_dir, need("shape.path"));

  c.h = number("flow.h", need("flow.h"));
  c.horizon = number("flow.horizon", need("flow.horizon"));
  if (has("flow.snapshot_stride")) {
    const long m = integer("flow.snapshot_stride", kv.at("flow.snapshot_stride"));
    if (m < 1) fail("flow.snapshot_stride must be at least 1");
    c.snapshot_stride = static_cast<int>(m);
  }
  if (has("flow.target_volume")) {
    c.target_volume = number("flow.target_volume", kv.at("flow.target_volume"));
    if (!(*c.target_volume > 0.0)) fail("flow.target_volume must be positive");
  }
  if (has("step.band_width")) c.step.band_width = number("step.band_width", kv.at("step.band_width"));
  if (has("step.exact_limit")) {
    c.step.exact_limit = static_cast<int>(integer("step.exact_limit", kv.at("step.exact_limit")));
  }
  if (has("diagnostics.times") && !kv.at("diagnostics.times").empty()) {
    c.diagnostic_times = numbers("diagnostics.times", kv.at("diagnostics.times"));
    for (double t : c.diagnostic_times) {
      if (!(t >= 0.0)) fail("diagnostics.times must be nonnegative");
    }
  }
  c.output_dir = resolve(base_dir, has("output.dir") ? kv.at("output.dir") : "output");
  if (has("seed")) {
    const long s = integer("seed", kv.at("seed"));
    if (s < 0) fail("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.shape.seed = c.seed;
  if (has("tolerances.delta")) {
    c.delta = number("tolerances.delta", kv.at("tolerances.delta"));
    if (!(c.delta > 0.0)) fail("tolerances.delta must be positive");
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(std::string("cannot read config: ") + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(text, parent.empty() ? "." : parent.string());
}

GridSet initial_set(const ScenarioConfig& config) {
  if (config.shape_kind == "raster") {
    GridSet set;
    try {
      set = read_raster(config.raster_path);
    } catch (const Error& e) {
      fail(std::string("shape.path: ") + e.what());
    }
    if (config.grid && !(*config.grid == set.spec())) {
      fail("grid.* keys disagree with the raster header");
    }
    return set;
  }
  try {
    return make_shape(config.shape_kind, config.shape, *config.grid);
  } catch (const Error& e) {
    fail(std::string("shape: ") + e.what());
  }
}

}  // namespace flatflow
