#include "flatflow/io.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace flatflow {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw Error(ErrorCode::ConfigError, "not a number: '" + text + "'");
  }
  return v;
}

long parse_int(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw Error(ErrorCode::ConfigError, "not an integer: '" + text + "'");
  }
  return v;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_raster(const std::string& path, const GridSet& set) {
  const auto& spec = set.spec();
  std::ostringstream out;
  if (spec.dim == 2) {
    out << "P5\n# flatflow spacing=" << format_double(spec.spacing)
        << " origin=" << format_double(spec.origin.x()) << ',' << format_double(spec.origin.y())
        << '\n'
        << spec.shape[0] << ' ' << spec.shape[1] << "\n255\n";
    // PGM rows run top to bottom; row 0 of the file is the largest y.
    for (int j = spec.shape[1] - 1; j >= 0; --j) {
      for (int i = 0; i < spec.shape[0]; ++i) {
        out.put(set.contains(spec.index(i, j, 0)) ? static_cast<char>(255) : '\0');
      }
    }
  } else {
    out << "3 " << spec.shape[0] << ' ' << spec.shape[1] << ' ' << spec.shape[2] << ' '
        << format_double(spec.spacing) << ' ' << format_double(spec.origin.x()) << ' '
        << format_double(spec.origin.y()) << ' ' << format_double(spec.origin.z()) << '\n';
    for (auto v : set.occupancy()) out.put(v ? '\1' : '\0');
  }
  write_text(path, out.str());
}

namespace {

// Reads the next whitespace-separated PGM token, skipping comments; returns
// the comments seen on the way.
std::string pgm_token(const std::string& data, std::size_t& pos, std::string& comments) {
  for (;;) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos < data.size() && data[pos] == '#') {
      const std::size_t eol = data.find('\n', pos);
      const std::size_t stop = eol == std::string::npos ? data.size() : eol;
      comments += data.substr(pos, stop - pos) + '\n';
      pos = stop;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return data.substr(start, pos - start);
}

GridSet read_pgm(const std::string& path, const std::string& data) {
  std::size_t pos = 0;
  std::string comments;
  const std::string magic = pgm_token(data, pos, comments);
  try {
    const int nx = static_cast<int>(parse_int(pgm_token(data, pos, comments)));
    const int ny = static_cast<int>(parse_int(pgm_token(data, pos, comments)));
    const long maxval = parse_int(pgm_token(data, pos, comments));
    if (nx < 3 || ny < 3 || maxval <= 0 || maxval > 255) {
      throw Error(ErrorCode::IoError, "unsupported PGM header in " + path);
    }
    double spacing = 1.0;
    Point origin(-0.5 * (nx - 1), -0.5 * (ny - 1), 0.0);
    const std::size_t sp = comments.find("spacing=");
    const std::size_t op = comments.find("origin=");
    if (sp != std::string::npos && op != std::string::npos) {
      std::istringstream s1(comments.substr(sp + 8));
      std::string tok;
      s1 >> tok;
      spacing = parse_double(tok);
      std::istringstream s2(comments.substr(op + 7));
      s2 >> tok;
      const std::size_t comma = tok.find(',');
      origin = Point(parse_double(tok.substr(0, comma)), parse_double(tok.substr(comma + 1)), 0.0);
    }
    const auto spec = GridSpec::make(2, {nx, ny, 1}, spacing, origin);
    std::vector<std::uint8_t> occ(spec.size(), 0);
    const int threshold = static_cast<int>((maxval + 1) / 2);
    if (magic == "P5") {
      ++pos;  // single whitespace after maxval
      if (data.size() < pos + spec.size()) throw Error(ErrorCode::IoError, "truncated PGM " + path);
      for (int j = ny - 1, r = 0; j >= 0; --j, ++r) {
        for (int i = 0; i < nx; ++i) {
          const auto v = static_cast<unsigned char>(data[pos + static_cast<std::size_t>(r) * nx + i]);
          occ[spec.index(i, j, 0)] = v >= threshold;
        }
      }
    } else {
      for (int j = ny - 1; j >= 0; --j) {
        for (int i = 0; i < nx; ++i) {
          const std::string t = pgm_token(data, pos, comments);
          if (t.empty()) throw Error(ErrorCode::IoError, "truncated PGM " + path);
          occ[spec.index(i, j, 0)] = parse_int(t) >= threshold;
        }
      }
    }
    return GridSet(spec, std::move(occ));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw Error(ErrorCode::IoError, "bad PGM " + path);
    throw;
  }
}

GridSet read_volume(const std::string& path, const std::string& data) {
  const std::size_t eol = data.find('\n');
  if (eol == std::string::npos) throw Error(ErrorCode::IoError, "missing header in " + path);
  std::istringstream hdr(data.substr(0, eol));
  std::vector<std::string> tok;
  for (std::string t; hdr >> t;) tok.push_back(t);
  try {
    if (tok.size() != 8 || tok[0] != "3") throw Error(ErrorCode::IoError, "bad header in " + path);
    const Index3 shape{static_cast<int>(parse_int(tok[1])), static_cast<int>(parse_int(tok[2])),
                       static_cast<int>(parse_int(tok[3]))};
    const auto spec = GridSpec::make(
        3, shape, parse_double(tok[4]),
        Point(parse_double(tok[5]), parse_double(tok[6]), parse_double(tok[7])));
    if (data.size() != eol + 1 + spec.size()) {
      throw Error(ErrorCode::IoError, "volume size does not match header in " + path);
    }
    std::vector<std::uint8_t> occ(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) occ[i] = data[eol + 1 + i] != 0;
    return GridSet(spec, std::move(occ));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw Error(ErrorCode::IoError, "bad header in " + path);
    throw;
  }
}

}  // namespace

GridSet read_raster(const std::string& path) {
  const std::string data = read_text(path);
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == '5' || data[1] == '2')) {
    return read_pgm(path, data);
  }
  return read_volume(path, data);
}

void write_samples_csv(const std::string& path, const CurvatureSampling& sampling, int dim) {
  std::ostringstream out;
  out << (dim == 2 ? "x,y" : "x,y,z") << ",area_weight,curvature\n";
  for (const auto& s : sampling.samples) {
    for (int a = 0; a < dim; ++a) out << format_double(s.position[a]) << ',';
    out << format_double(s.area_weight) << ',' << format_double(s.curvature) << '\n';
  }
  write_text(path, out.str());
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::IoError, "missing CSV column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw Error(ErrorCode::IoError, "ragged CSV row in " + path);
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw Error(ErrorCode::IoError, "empty CSV " + path);
  return t;
}

}  // namespace flatflow
