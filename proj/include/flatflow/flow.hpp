#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flatflow/grid.hpp"
#include "flatflow/step.hpp"

namespace flatflow {

/// Occupancy stored as the sorted cell indices where occupancy toggles,
/// starting from an empty prefix.
class RleSet {
 public:
  RleSet() = default;
  explicit RleSet(const GridSet& set);

  GridSet decode(const GridSpec& spec) const;
  std::size_t count() const;
  const std::vector<std::uint32_t>& toggles() const { return toggles_; }

 private:
  std::vector<std::uint32_t> toggles_;
};

/// Cells in exactly one of the two sets, computed run by run.
std::size_t symmetric_difference_count(const RleSet& a, const RleSet& b);

/// One face-connected component of a record's set.
struct ComponentInfo {
  double volume = 0.0;
  /// Largest inscribed radius: max over the component of -signed distance.
  double inscribed_radius = 0.0;
  Point centroid = Point::Zero();
  /// Component of the previous record it overlaps most, or -1.
  int parent = -1;
};

struct StepRecord {
  int k = 0;
  double t = 0.0;
  double volume = 0.0;
  double perimeter = 0.0;
  double lambda = 0.0;
  /// Interior search multiplier of the step, reported even when the volume
  /// misses the target.
  double search_multiplier = 0.0;
  /// (1/h) Σ_{E_k Δ E_{k-1}} |d̄_{k-1}| cell volume; zero for k = 0.
  double dissipation_term = 0.0;
  /// |E_k Δ E_{k-1}|; zero for k = 0.
  double sym_diff_volume = 0.0;
  bool guarded = false;
  bool stalled = false;
  std::vector<ComponentInfo> components;
  /// Stored set (every `snapshot_stride`-th record and the last one).
  std::optional<RleSet> set;
};

enum class ComponentEventKind { Extinction, Split, Merge };

struct ComponentEvent {
  ComponentEventKind kind;
  int k;
  double t;
  /// Component index in record k-1 (extinction, split) or record k (merge).
  int component;
  /// Volume lost at extinction; zero otherwise.
  double volume;
};

const char* to_string(ComponentEventKind kind);

struct FlowConfig {
  /// Target volume; defaults to the unit-ball volume of the grid dimension.
  std::optional<double> target_volume;
  /// Store every m-th set; the first and last are always stored.
  int snapshot_stride = 1;
  StepOptions step;
};

struct FlowTrace {
  double h = 0.0;
  double horizon = 0.0;
  double target_volume = 0.0;
  GridSpec spec;
  GridSet initial_set;
  /// records[0] describes the initial set.
  std::vector<StepRecord> records;
  std::vector<ComponentEvent> events;
};

/// Runs ceil(horizon / h) minimizing-movement steps from `initial`.
/// Throws Error(EmptySet), Error(StepTooLarge) and Error(HorizonTooShort).
FlowTrace run_flow(const GridSet& initial, double h, double horizon, const FlowConfig& config = {});

/// Number of steps for a horizon: ceil(horizon / h) up to rounding noise.
int step_count(double h, double horizon);

struct DissipationViolation {
  int k;
  std::string what;
  double value;
};

struct DissipationReport {
  /// slack[k-1] for step k: P_{k-1} + pen_{k-1} - (P_k + D_k + pen_k).
  std::vector<double> step_slack;
  /// P_0 + pen_0 - (P_k + Σ_{j<=k} D_j + pen_k) for every k.
  std::vector<double> iterated_slack;
  double min_step_slack = 0.0;
  double min_iterated_slack = 0.0;
  /// Steps k where |E_{k-1}| matched the target within half a cell and the
  /// perimeter still increased (informational).
  std::vector<int> perimeter_increase_flags;
  /// Zero-tolerance failures: negative slack, broken volume trap, invalid
  /// record times or multipliers outside [-1/√h, 1/√h].
  std::vector<DissipationViolation> violations;
  bool ok() const { return violations.empty(); }
};

DissipationReport verify_dissipation(const FlowTrace& trace);

struct ContinuityStats {
  /// max over stored pairs s < t, t - s >= h, of |E_s Δ E_t| / √(t - s).
  double constant = 0.0;
  int pairs = 0;
  double worst_s = 0.0;
  double worst_t = 0.0;
};

/// Needs at least two stored sets; throws Error(RangeError) otherwise.
ContinuityStats continuity_stats(const FlowTrace& trace);

struct MultiplierStats {
  double t1 = 0.0;
  double t2 = 0.0;
  /// Σ λ_k² h over records with t_k in (T1, T2].
  double lambda_sq_integral = 0.0;
  /// h times the number of records in (T1, T2] whose volume misses the
  /// target by more than half a cell.
  double violation_measure = 0.0;
  /// violation_measure / (h (T2 - T1 + 1)).
  double violation_constant = 0.0;
  /// lambda_sq_integral / (T2 - T1 + 1).
  double lambda_constant = 0.0;
  double max_abs_lambda = 0.0;
};

/// Requires h <= T1 < T2 <= last record time; throws Error(RangeError).
MultiplierStats multiplier_stats(const FlowTrace& trace, double t1, double t2);

struct ComparisonStats {
  /// Smallest C with r_{k+1}² - r_k² >= -C (1 + |λ_{k+1}|) h over matched
  /// components (largest inscribed radii).
  double constant = 0.0;
  int pairs = 0;
};

ComparisonStats comparison_stats(const FlowTrace& trace);

struct MovementStats {
  /// max over steps and cells of E_k Δ E_{k-1} of |d_{∂E_{k-1}}| / √h.
  double constant = 0.0;
  int worst_k = 0;
  /// Consecutive stored pairs examined.
  int steps = 0;
};

/// Needs two consecutive stored sets; throws Error(RangeError) otherwise.
MovementStats movement_stats(const FlowTrace& trace);

/// Trace CSV with columns k,t,volume,perimeter,lambda,dissipation_term,
/// sym_diff_volume; doubles printed with 17 significant digits.
std::string trace_csv(const FlowTrace& trace);

/// Parses trace CSV text into records (no sets or components).
std::vector<StepRecord> parse_trace_csv(const std::string& path);

}  // namespace flatflow
