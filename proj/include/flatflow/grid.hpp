#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "flatflow/error.hpp"

namespace flatflow {

/// Physical point. Two-dimensional grids keep the z component at zero.
using Point = Eigen::Vector3d;
using Index3 = std::array<int, 3>;

/// Volume of the unit ball in R^k (k = 1, 2, 3).
double unit_ball_volume(int k);

/// Uniform cell-centred grid over R^dim, dim in {2, 3}. Cell (i,j,k) has its
/// centre at origin + spacing * (i,j,k); 2D grids have shape[2] == 1.
struct GridSpec {
  int dim = 2;
  Index3 shape{0, 0, 1};
  double spacing = 1.0;
  Point origin = Point::Zero();

  /// Validating constructor; throws Error(InvalidGrid).
  static GridSpec make(int dim, Index3 shape, double spacing, const Point& origin);

  /// Grid whose cell centres are symmetric about the coordinate origin.
  static GridSpec centered(int dim, Index3 shape, double spacing);

  /// Curvature dimension n (boundary is n-dimensional).
  int n() const { return dim - 1; }

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(shape[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(shape[1]) * k);
  }
  std::size_t index(const Index3& c) const { return index(c[0], c[1], c[2]); }

  Index3 coords(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(shape[0]);
    const auto ny = static_cast<std::size_t>(shape[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }

  bool in_bounds(const Index3& c) const {
    for (int a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= shape[a]) return false;
    }
    return true;
  }

  /// True for cells on the outermost layer of an active axis.
  bool in_margin(const Index3& c) const {
    for (int a = 0; a < dim; ++a) {
      if (c[a] == 0 || c[a] == shape[a] - 1) return true;
    }
    return false;
  }

  Point center(const Index3& c) const {
    return origin + spacing * Point(c[0], c[1], c[2]);
  }
  Point center(std::size_t idx) const { return center(coords(idx)); }

  /// Continuous grid coordinates (cell units) of a physical point.
  Eigen::Vector3d to_grid(const Point& p) const { return (p - origin) / spacing; }

  double cell_volume() const { return dim == 2 ? spacing * spacing : spacing * spacing * spacing; }

  /// Cell index of the neighbour at `offset`, or nullopt when outside the grid.
  std::optional<std::size_t> neighbor(std::size_t idx, const Index3& offset) const {
    Index3 c = coords(idx);
    for (int a = 0; a < 3; ++a) c[a] += offset[a];
    if (!in_bounds(c)) return std::nullopt;
    return index(c);
  }

  bool operator==(const GridSpec& o) const {
    return dim == o.dim && shape == o.shape && spacing == o.spacing && origin == o.origin;
  }
};

/// Occupancy raster. Occupied cells never lie on the outermost layer, so the
/// interface is always interior to the grid.
class GridSet {
 public:
  GridSet() = default;
  explicit GridSet(const GridSpec& spec) : spec_(spec), occ_(spec.size(), 0) {}

  /// Throws Error(MarginViolation) if an occupied cell touches the margin.
  GridSet(const GridSpec& spec, std::vector<std::uint8_t> occupancy);

  const GridSpec& spec() const { return spec_; }
  const std::vector<std::uint8_t>& occupancy() const { return occ_; }
  bool contains(std::size_t idx) const { return occ_[idx] != 0; }
  bool contains(const Index3& c) const { return spec_.in_bounds(c) && occ_[spec_.index(c)] != 0; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  /// Cell indices of all occupied cells in increasing order.
  std::vector<std::size_t> cells() const;

  bool operator==(const GridSet& o) const { return spec_ == o.spec_ && occ_ == o.occ_; }

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> occ_;
};

/// Number of cells occupied in exactly one of the two sets.
std::size_t symmetric_difference_count(const GridSet& a, const GridSet& b);

/// a ⊆ b, cellwise.
bool is_subset(const GridSet& a, const GridSet& b);

/// One real value per cell.
struct ScalarField {
  GridSpec spec;
  Eigen::ArrayXd values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& s) : spec(s), values(Eigen::ArrayXd::Zero(s.size())) {}

  double operator[](std::size_t idx) const { return values[static_cast<Eigen::Index>(idx)]; }
  double& operator[](std::size_t idx) { return values[static_cast<Eigen::Index>(idx)]; }

  /// Multilinear interpolation of cell-centre values; clamps to the grid.
  double interpolate(const Point& p) const;

  /// Gradient of the multilinear interpolant (central differences at centres).
  Eigen::Vector3d gradient(const Point& p) const;
};

/// Interface sample carrying a share of the boundary measure.
struct BoundarySample {
  Point position = Point::Zero();
  double area_weight = 0.0;
  double curvature = 0.0;
  Point normal = Point::Zero();
};

/// N balls of a common radius.
struct BallUnion {
  std::vector<Point> centers;
  double radius = 0.0;
  double tolerance = 0.0;

  /// Throws Error(BadParams) if empty, radius <= 0, or two balls overlap by
  /// more than `tolerance`.
  void validate() const;

  /// Signed distance to the union; exact when the balls are disjoint.
  double signed_distance(const Point& p) const;
};

/// One undirected neighbourhood direction with its Cauchy-Crofton weight
/// (length units in 2D, area units in 3D).
struct StencilEdge {
  Index3 offset;
  double weight;
};

/// 16-neighbourhood (8 undirected directions) in 2D, 26-neighbourhood
/// (13 undirected directions) in 3D.
std::vector<StencilEdge> crofton_stencil(const GridSpec& spec);

}  // namespace flatflow
