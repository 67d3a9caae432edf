#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatflow/geometry.hpp"
#include "flatflow/grid.hpp"

namespace flatflow {

struct AlexandrovOptions {
  /// Gaussian smoothing of the signed distance; zero selects
  /// max(3 s, min((s R³)^(1/4), R / 3)) with R = n / λ.
  double smoothing = 0.0;
  /// Deviation threshold of the rigidity hypothesis.
  double delta = 0.5;
  /// Montiel-Ros radii as fractions of R, and shifts as fractions of r.
  std::vector<double> r_fractions{0.2, 0.4, 0.6};
  std::vector<double> rho_fractions{0.0, 0.5};
  /// Density-profile radii as fractions of delta / lambda.
  std::vector<double> density_fractions{0.1, 0.25, 0.5, 1.0};
};

struct AlexandrovReport {
  int dim = 2;
  int n = 1;
  double lambda_hat = 0.0;
  double epsilon = 0.0;
  /// n / lambda_hat.
  double R = 0.0;
  /// (n + 2)^-3.
  double q = 0.0;
  int N = 0;
  BallUnion balls;
  double hausdorff_one_sided = 0.0;
  double hausdorff_symmetric = 0.0;
  double perimeter = 0.0;
  double volume = 0.0;
  /// |P - N (n+1) ω_{n+1} R^n|.
  double perimeter_residual = 0.0;
  /// Largest ρ₋ with ∪B_{ρ₋}(x_i) ⊂ E and smallest ρ₊ with E ⊂ ∪B_{ρ₊}(x_i).
  double rho_minus = 0.0;
  double rho_plus = 0.0;
  /// R - ρ₋ and ρ₊ - R.
  double inclusion_deficit = 0.0;
  double inclusion_excess = 0.0;
  double dropped_fraction = 0.0;
  bool dropped_alarm = false;
  double smoothing = 0.0;
  /// ε of a rasterized ball of radius R at the same spacing and smoothing,
  /// times (P / P_ball)^(1/n) for the boundary measure of the input.
  double noise_floor = 0.0;
  bool epsilon_floored = false;
  double r0 = 0.0;
  std::size_t core_cells = 0;
  double gap_threshold = 0.0;
  /// Re-clustering at twice the gap threshold gives the same N.
  bool threshold_stable = true;
  double delta = 0.5;
  bool outside_hypothesis = false;
  /// "ok" or "outside theorem hypothesis".
  std::string status;
};

struct MontielRosRow {
  double r = 0.0;
  double rho = 0.0;
  double measured_eroded = 0.0;
  double predicted_eroded = 0.0;
  double residual1 = 0.0;
  /// Boundary measure farther than one cell from dilate(erode(E, r), r).
  double residual2_proxy = 0.0;
  double measured_sum = 0.0;
  double predicted_sum = 0.0;
  double residual3 = 0.0;
};

struct MontielRosTable {
  double lambda = 0.0;
  double R = 0.0;
  double volume = 0.0;
  std::vector<MontielRosRow> rows;
};

struct DensityRow {
  double r = 0.0;
  double min_ratio = 0.0;
  Point argmin = Point::Zero();
  /// min_ratio below half the flat value ω_n.
  bool flagged = false;
};

struct DiameterRow {
  int component = 0;
  double diameter = 0.0;
  /// ∫ |H|^(n-1) over the component boundary.
  double curvature_integral = 0.0;
  double ratio = 0.0;
};

/// n P / ((n + 1) |E|). Throws Error(EmptySet).
double estimate_lambda(const GridSet& set);

/// (Σ w |H - λ|^n)^(1/n) over the curvature samples.
double curvature_deviation(const CurvatureSampling& sampling, double lambda, int n);
double curvature_deviation(const GridSet& set, double lambda, double smoothing = 0.0);

/// ε measured on a rasterized ball of radius R on a grid of the same spacing.
double curvature_noise_floor(int dim, double spacing, double R, double smoothing);

/// Rows for every r in r_list and ρ in rho_list with ρ < r. Throws
/// Error(RadiusOutOfRange) unless 0 < r < R = n/λ and ρ >= 0.
MontielRosTable montiel_ros_residuals(const GridSet& set, double lambda,
                                      const std::vector<double>& r_list,
                                      const std::vector<double>& rho_list);

/// Clusters the core erode(E, r0) and fits N balls of radius R = n/λ.
/// Throws Error(EmptyCore) when the core is empty.
std::pair<BallUnion, AlexandrovReport> cluster_and_fit(const GridSet& set, double epsilon,
                                                       double lambda,
                                                       const AlexandrovOptions& opt = {});

/// Minimum over samples x of H^n(B_r(x) ∩ ∂E) / r^n for each radius r <= δ/λ.
std::vector<DensityRow> density_profile(const GridSet& set, double lambda,
                                        const std::vector<double>& radii, double delta = 0.5);

/// Diameter and ∫|H|^(n-1) per face-connected component.
std::vector<DiameterRow> component_diameter_check(const GridSet& set, double smoothing = 0.0);

/// Full pipeline: λ̂ (or the given λ), ε, fit, residual table, monitors.
struct Diagnosis {
  AlexandrovReport report;
  MontielRosTable table;
  std::vector<DensityRow> density;
  std::vector<DiameterRow> diameters;
};

Diagnosis diagnose(const GridSet& set, std::optional<double> lambda = std::nullopt,
                   const AlexandrovOptions& opt = {});

/// MontielRosTable as CSV.
std::string montiel_ros_csv(const MontielRosTable& table);

}  // namespace flatflow
