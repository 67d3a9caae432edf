#include "flatflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flatflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::MarginViolation: return "MarginViolation";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::FullGrid: return "FullGrid";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::EmptyMinimizer: return "EmptyMinimizer";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::EmptyCore: return "EmptyCore";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double unit_ball_volume(int k) {
  switch (k) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw Error(ErrorCode::InvalidGrid, "unit ball volume only for k <= 3");
  }
}

GridSpec GridSpec::make(int dim, Index3 shape, double spacing, const Point& origin) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidGrid, "dim must be 2 or 3");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorCode::InvalidGrid, "spacing must be positive");
  }
  if (dim == 2) shape[2] = 1;
  for (int a = 0; a < dim; ++a) {
    if (shape[a] < 4) throw Error(ErrorCode::InvalidGrid, "every axis needs at least 4 cells");
  }
  GridSpec s;
  s.dim = dim;
  s.shape = shape;
  s.spacing = spacing;
  s.origin = origin;
  if (dim == 2) s.origin.z() = 0.0;
  return s;
}

GridSpec GridSpec::centered(int dim, Index3 shape, double spacing) {
  if (dim == 2) shape[2] = 1;
  Point origin = Point::Zero();
  for (int a = 0; a < dim; ++a) origin[a] = -0.5 * (shape[a] - 1) * spacing;
  return make(dim, shape, spacing, origin);
}

GridSet::GridSet(const GridSpec& spec, std::vector<std::uint8_t> occupancy)
    : spec_(spec), occ_(std::move(occupancy)) {
  if (occ_.size() != spec_.size()) {
    throw Error(ErrorCode::InvalidGrid, "occupancy size does not match grid");
  }
  for (std::size_t idx = 0; idx < occ_.size(); ++idx) {
    if (occ_[idx] != 0) {
      occ_[idx] = 1;
      if (spec_.in_margin(spec_.coords(idx))) {
        throw Error(ErrorCode::MarginViolation, "occupied cell on the grid boundary layer");
      }
    }
  }
}

std::size_t GridSet::count() const {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> GridSet::cells() const {
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < occ_.size(); ++idx) {
    if (occ_[idx]) out.push_back(idx);
  }
  return out;
}

std::size_t symmetric_difference_count(const GridSet& a, const GridSet& b) {
  const auto& x = a.occupancy();
  const auto& y = b.occupancy();
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] != y[i]);
  return n;
}

bool is_subset(const GridSet& a, const GridSet& b) {
  const auto& x = a.occupancy();
  const auto& y = b.occupancy();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && !y[i]) return false;
  }
  return true;
}

namespace {

struct Stencil {
  Index3 base;
  Eigen::Vector3d frac;
};

Stencil locate(const GridSpec& spec, const Point& p) {
  Eigen::Vector3d g = spec.to_grid(p);
  Stencil s{{0, 0, 0}, Eigen::Vector3d::Zero()};
  for (int a = 0; a < spec.dim; ++a) {
    double v = std::clamp(g[a], 0.0, static_cast<double>(spec.shape[a] - 1));
    int i0 = std::min(static_cast<int>(std::floor(v)), spec.shape[a] - 2);
    s.base[a] = i0;
    s.frac[a] = v - i0;
  }
  return s;
}

}  // namespace

double ScalarField::interpolate(const Point& p) const {
  const Stencil st = locate(spec, p);
  const int corners = spec.dim == 2 ? 4 : 8;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    Index3 q = st.base;
    for (int a = 0; a < spec.dim; ++a) {
      const int bit = (c >> a) & 1;
      q[a] += bit;
      w *= bit ? st.frac[a] : 1.0 - st.frac[a];
    }
    acc += w * (*this)[spec.index(q)];
  }
  return acc;
}

Eigen::Vector3d ScalarField::gradient(const Point& p) const {
  const Stencil st = locate(spec, p);
  const int corners = spec.dim == 2 ? 4 : 8;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int c = 0; c < corners; ++c) {
    Index3 q = st.base;
    for (int a = 0; a < spec.dim; ++a) q[a] += (c >> a) & 1;
    const double v = (*this)[spec.index(q)];
    for (int d = 0; d < spec.dim; ++d) {
      double w = 1.0;
      for (int a = 0; a < spec.dim; ++a) {
        const int bit = (c >> a) & 1;
        if (a == d) {
          w *= bit ? 1.0 : -1.0;
        } else {
          w *= bit ? st.frac[a] : 1.0 - st.frac[a];
        }
      }
      g[d] += w * v;
    }
  }
  return g / spec.spacing;
}

void BallUnion::validate() const {
  if (centers.empty()) throw Error(ErrorCode::BadParams, "ball union needs at least one ball");
  if (!(radius > 0.0)) throw Error(ErrorCode::BadParams, "ball radius must be positive");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      if ((centers[i] - centers[j]).norm() < 2.0 * radius - tolerance) {
        throw Error(ErrorCode::BadParams, "balls overlap");
      }
    }
  }
}

double BallUnion::signed_distance(const Point& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) best = std::min(best, (p - c).norm() - radius);
  return best;
}

std::vector<StencilEdge> crofton_stencil(const GridSpec& spec) {
  std::vector<StencilEdge> out;
  const double s = spec.spacing;
  if (spec.dim == 2) {
    const std::vector<Index3> dirs = {{1, 0, 0},  {2, 1, 0},  {1, 1, 0},  {1, 2, 0},
                                      {0, 1, 0},  {-1, 2, 0}, {-1, 1, 0}, {-2, 1, 0}};
    // Directions above are listed by increasing angle in [0, pi).
    std::vector<double> phi;
    for (const auto& d : dirs) phi.push_back(std::atan2(d[1], d[0]));
    const std::size_t m = dirs.size();
    for (std::size_t k = 0; k < m; ++k) {
      const double next = k + 1 < m ? phi[k + 1] : phi[0] + std::numbers::pi;
      const double prev = k > 0 ? phi[k - 1] : phi[m - 1] - std::numbers::pi;
      const double dphi = 0.5 * (next - prev);
      const double len = std::hypot(dirs[k][0], dirs[k][1]);
      out.push_back({dirs[k], s * dphi / (2.0 * len)});
    }
  } else {
    // Voronoi solid angles of the 26 unit directions on the sphere, computed
    // exactly from the spherical-polygon areas of each class.
    constexpr double kAxis = 0.5752619468228387;
    constexpr double kFace = 0.4647122754424623;
    constexpr double kBody = 0.44228145351407416;
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        for (int c = -1; c <= 1; ++c) {
          const Index3 d{a, b, c};
          // keep one representative of each antipodal pair
          const bool positive = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
          if (!positive) continue;
          const int nz = (a != 0) + (b != 0) + (c != 0);
          const double omega = nz == 1 ? kAxis : (nz == 2 ? kFace : kBody);
          const double len = std::sqrt(static_cast<double>(nz));
          out.push_back({d, s * s * omega / (std::numbers::pi * len)});
        }
      }
    }
  }
  return out;
}

}  // namespace flatflow
