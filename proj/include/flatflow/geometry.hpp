#pragma once

#include <vector>

#include "flatflow/grid.hpp"

namespace flatflow {

/// Occupied count times cell volume.
double volume(const GridSet& set);

/// Cauchy-Crofton perimeter: sum of stencil weights over cut neighbour pairs.
/// Throws Error(EmptySet).
double perimeter(const GridSet& set);

/// {cells with signed distance < -r}.
GridSet erode(const GridSet& set, double r);
GridSet erode(const GridSet& set, double r, const ScalarField& sdf);

/// How dilation measures the distance to the set.
enum class DilateMode {
  /// Distance to the reconstructed interface (unbiased in the mean).
  Interface,
  /// Distance to occupied cell centres. Conservative: it guarantees the
  /// cellwise inclusions dilate(erode(E, r), rho) ⊆ erode(E, r - rho).
  CellCentres,
};

/// set ∪ {cells at distance < rho from the set}. Cells of the one-cell margin
/// are never added, so the result stays a valid GridSet.
GridSet dilate(const GridSet& set, double rho, DilateMode mode = DilateMode::Interface);

/// Separable Gaussian blur with standard deviation `sigma` (length units),
/// truncated at 3 sigma. Values past the edge are odd reflections about the
/// edge value, which keeps locally linear fields such as distances unbiased.
ScalarField gaussian_smooth(const ScalarField& field, double sigma);

struct CurvatureSampling {
  std::vector<BoundarySample> samples;
  /// Crofton weight of samples dropped for a degenerate normal.
  double dropped_weight = 0.0;
  double total_weight = 0.0;
  double smoothing = 0.0;

  double dropped_fraction() const { return total_weight > 0.0 ? dropped_weight / total_weight : 0.0; }
  /// Dropped fraction above 1% is a quality alarm.
  bool alarm() const { return dropped_fraction() > 0.01; }
};

/// One sample per cut stencil pair, located at the zero crossing of the
/// signed distance along the pair and carrying that pair's Crofton weight, so
/// the weights of all samples sum to perimeter(set). Curvature and normal come
/// from the Gaussian-smoothed signed distance. Samples with smoothed gradient
/// norm below 0.5 are dropped and accounted in `dropped_weight`.
/// Throws Error(RangeError) when smoothing < spacing.
///
/// Without an explicit `sdf`, each face-connected component is sampled with
/// its own signed distance, which keeps neighbouring components out of the
/// smoothing window. Curvature is local, so this changes only the estimator.
CurvatureSampling mean_curvature_samples(const GridSet& set, double smoothing);
CurvatureSampling mean_curvature_samples(const GridSet& set, double smoothing,
                                         const ScalarField& sdf);

/// Position and Crofton weight of every in-grid cut stencil pair, placed at
/// the zero crossing of the signed distance. Nothing is dropped, so the weights
/// carry the full boundary measure away from the grid edge.
std::vector<BoundarySample> interface_measure(const GridSet& set, const ScalarField& sdf);

/// Face-adjacency component labels (-1 outside), numbered in order of first
/// cell index. Returns the number of components.
int label_components(const GridSet& set, std::vector<int>& labels);

/// Face-adjacency components, ordered by their first cell index.
std::vector<GridSet> connected_components(const GridSet& set);

/// Interface points used for Hausdorff measurements: midpoints between
/// face-adjacent inside/outside cell centres.
std::vector<Point> boundary_points(const GridSet& set);

/// sup over boundary points of E of the distance to ∂F. Throws Error(EmptySet).
double hausdorff_boundary_distance(const GridSet& set, const BallUnion& balls);

/// Symmetric variant: also includes sup over ∂F of the distance to the
/// reconstructed interface of E (spheres sampled at half-cell density).
double hausdorff_symmetric(const GridSet& set, const BallUnion& balls);

/// Distance from `p` to ∂F for a union of equal disjoint balls.
double distance_to_ball_boundary(const BallUnion& balls, const Point& p);

}  // namespace flatflow
