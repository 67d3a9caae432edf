#pragma once

#include <array>
#include <vector>

#include "flatflow/grid.hpp"

namespace flatflow {

/// Piece of the reconstructed interface. In 2D this is a marching-squares
/// segment between edge midpoints; in 3D both ends coincide at an edge
/// midpoint (the interface is represented by its marching-cubes vertex set).
struct InterfaceElement {
  Point a;
  Point b;
};

/// Interface reconstruction of `set`. Saddle configurations separate the two
/// occupied corners, which matches face connectivity.
std::vector<InterfaceElement> interface_elements(const GridSet& set);

/// Euclidean distance from `p` to the reconstructed interface (brute force
/// over interface elements).
double distance_to_interface(const std::vector<InterfaceElement>& elems, const Point& p);

/// Signed distance from each cell centre to the reconstructed interface,
/// negative inside. Exact: computed by a separable distance transform on a
/// refined lattice that contains every nearest interface point.
/// Throws Error(EmptySet) or Error(FullGrid) when there is no interface.
ScalarField signed_distance(const GridSet& set);

/// Squared distance transform of a binary seed mask on a dense lattice,
/// evaluated only at lattice points whose coordinates are multiples of
/// `stride`. `shape` is the fine lattice shape; the output has shape
/// (shape[a] - 1) / stride + 1 per axis. Entries with no seed are +inf.
Eigen::ArrayXd squared_distance_transform(const std::vector<std::uint8_t>& seeds,
                                          const Index3& shape, int dim, int stride);

}  // namespace flatflow
