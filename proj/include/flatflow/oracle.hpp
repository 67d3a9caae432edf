#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flatflow/grid.hpp"
#include "flatflow/step.hpp"

namespace flatflow {

/// Disjoint balls moving by volume-preserving mean curvature flow:
/// r_i' = λ - n / r_i with λ = n Σ r_i^(n-1) / Σ r_i^n.
struct BallSystem {
  int n = 1;
  std::vector<double> radii;

  /// Multiplier λ over the balls with positive radius.
  double lambda() const;
  /// Σ r_i^(n+1) over active balls (volume over the unit-ball volume).
  double volume_sum() const;
};

struct ExtinctionEvent {
  double time;
  int ball;
  /// Σ r^(n+1) removed with the ball.
  double lost_volume_sum;
};

struct BallTrajectory {
  int n = 1;
  std::vector<double> times;
  /// radii[k][i]; zero once ball i is extinct.
  std::vector<std::vector<double>> radii;
  std::vector<double> lambda;
  std::vector<ExtinctionEvent> events;
};

/// Fixed-step RK4 from radii0 over [0, horizon], recording every `dt`.
/// Steps are subdivided near extinction so the stiff tail stays resolved.
/// A ball whose radius falls below `extinction` is removed and logged.
BallTrajectory ball_ode_integrate(const std::vector<double>& radii0, int n, double horizon,
                                  double dt = 1e-4, double extinction = 1e-3);

/// Radii of a trajectory at time t (linear interpolation between records).
std::vector<double> trajectory_radii_at(const BallTrajectory& traj, double t);

/// Reference minimizer over all subsets of the non-margin cells, by
/// enumeration scored with energy_of. Throws Error(TooLarge) above 16 cells.
GridSet exhaustive_step_minimizer(const GridSet& prev, double h);
GridSet exhaustive_step_minimizer(const StepEnergy& e);

/// Parameters for make_shape. Unused fields are ignored by a kind.
struct ShapeParams {
  std::vector<Point> centers;
  std::vector<double> radii;
  /// Cube side length.
  double side = 0.0;
  double neck_width = 0.0;
  /// noisy_ball: relative radial perturbation amplitude and mode count.
  double noise_amplitude = 0.0;
  int noise_modes = 6;
  std::uint64_t seed = 0;
  /// When set, the shape keeps the cells with the smallest implicit value
  /// until their volume is closest to this target.
  std::optional<double> target_volume;
};

/// kind ∈ {ball, ball_union, cube, dumbbell, noisy_ball}; rasterizes
/// {φ < 0} of the shape's implicit function. Throws Error(BadParams) for
/// invalid parameters, overlapping or touching balls, a zero neck, or a
/// shape that reaches the grid margin.
GridSet make_shape(const std::string& kind, const ShapeParams& params, const GridSpec& spec);

}  // namespace flatflow
