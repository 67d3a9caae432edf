#pragma once

#include <string>
#include <vector>

#include "flatflow/geometry.hpp"
#include "flatflow/grid.hpp"

namespace flatflow {

/// Shortest decimal text that reads back to the same double ("%.17g").
std::string format_double(double v);

/// Parses a full string as a double; throws Error(ConfigError) otherwise.
double parse_double(const std::string& text);
long parse_int(const std::string& text);

/// Raster dump. 2D sets are written as binary PGM (P5, 255 = occupied) with
/// the spacing and origin in a header comment. 3D sets are a one-line text
/// header "3 nx ny nz spacing ox oy oz" followed by nx*ny*nz bytes (0 or 1)
/// in x-fastest order.
void write_raster(const std::string& path, const GridSet& set);

/// Reads either dump format (detected from the first bytes). PGM files
/// without the header comment get spacing 1 and a centred origin; any grey
/// level >= 128 counts as occupied. Throws Error(IoError).
GridSet read_raster(const std::string& path);

/// Boundary samples as CSV: x,y[,z],area_weight,curvature.
void write_samples_csv(const std::string& path, const CurvatureSampling& sampling, int dim);

/// Minimal CSV table: a header row and string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position of `name`; throws Error(IoError) when absent.
  std::size_t column(const std::string& name) const;
};

/// Reads comma-separated text without quoting. Throws Error(IoError).
CsvTable read_csv(const std::string& path);

/// Writes `text` to `path`, creating parent directories. Throws Error(IoError).
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace flatflow
