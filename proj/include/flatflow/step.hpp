#pragma once

#include <vector>

#include "flatflow/grid.hpp"

namespace flatflow {

/// One minimizing-movements step: F_h(E) = P(E) + (1/h) ∫_E d̄_prev
/// + (1/√h) | |E| - target |, discretized on the grid of `prev`.
struct StepEnergy {
  GridSpec spec;
  GridSet prev;
  ScalarField prev_distance;
  /// d̄_prev(cell) / h * cell volume.
  Eigen::ArrayXd linear_term;
  std::vector<StencilEdge> cut_weights;
  double h = 0.0;
  double target_volume = 0.0;
  double penalty_scale = 0.0;
  double prev_perimeter = 0.0;
  double prev_volume = 0.0;
};

/// Search controls for minimize_step.
struct StepOptions {
  /// Initial band half-width (length). Cells farther than this from the
  /// previous interface are held fixed; the band doubles whenever the
  /// solution touches its edge. Zero selects max(4 spacing, 1.5 √h).
  double band_width = 0.0;
  /// Problems with at most this many free cells are solved exactly by
  /// Lagrangian branch and bound.
  int exact_limit = 24;
  int max_bisections = 40;
  /// Bisections used to locate the multiplier interval of the chosen set.
  int multiplier_bisections = 24;
};

struct CutSolution {
  GridSet set;
  /// Absolute F_h(set), as computed by energy_of.
  double energy = 0.0;
  /// Reported multiplier: ±1/√h when the volume misses the target by more
  /// than half a cell, otherwise the interior search multiplier.
  double multiplier = 0.0;
  /// Interior estimate: midpoint of the chosen set's optimality interval, or
  /// the breakpoint of the final bracket.
  double search_multiplier = 0.0;
  double flow_value = 0.0;
  /// True when the discrete dissipation guard replaced the candidate by prev.
  bool guarded = false;
  /// True when no candidate improved on the previous set.
  bool stalled = false;
  bool exact = false;
  int cut_solves = 0;
  double band_width = 0.0;
  int free_cells = 0;
};

/// Terms of F_h for one candidate.
struct EnergyTerms {
  double perimeter = 0.0;
  /// (1/h) Σ_{cells in candidate} d̄_prev * cell volume.
  double linear = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

/// Default target volume: the volume of the unit ball in the grid dimension.
double default_target_volume(const GridSpec& spec);

/// Throws Error(StepTooLarge) unless 0 < h < (target / P(prev))^2, and
/// Error(EmptySet) for an empty prev.
StepEnergy assemble_step(const GridSet& prev, double h);
StepEnergy assemble_step(const GridSet& prev, double h, double target_volume);
StepEnergy assemble_step(const GridSet& prev, double h, double target_volume,
                         const ScalarField& prev_distance);

/// Throws Error(EmptyMinimizer) when the best set is empty.
CutSolution minimize_step(const StepEnergy& e, const StepOptions& opt = {});

EnergyTerms energy_terms(const GridSet& candidate, const StepEnergy& e);

/// Absolute F_h(candidate, prev) with the default target volume.
double energy_of(const GridSet& candidate, const GridSet& prev, double h);
double energy_of(const GridSet& candidate, const StepEnergy& e);

/// (1/h) Σ_{candidate Δ prev} |d̄_prev| * cell volume.
double dissipation_term(const GridSet& candidate, const StepEnergy& e);

/// (1/√h) |volume - target|.
double volume_penalty(double volume, double h, double target);

/// Slack of the discrete dissipation inequality
/// P_prev + pen_prev - (P_new + D_new + pen_new). The single definition used
/// by the step guard and by every audit.
double dissipation_slack(double p_prev, double v_prev, double p_new, double d_new, double v_new,
                         double h, double target);

}  // namespace flatflow
