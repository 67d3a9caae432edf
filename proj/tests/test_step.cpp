#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flatflow/distance.hpp"
#include "flatflow/geometry.hpp"
#include "flatflow/oracle.hpp"
#include "flatflow/step.hpp"
#include "support.hpp"

using namespace flatflow;

namespace {

// Reference F_h evaluator written against the definition: explicit pair
// loops for the perimeter, brute-force distances for the linear term.
double reference_energy(const GridSet& cand, const GridSet& prev, double h) {
  const auto& spec = prev.spec();
  const auto stencil = crofton_stencil(spec);
  double per = 0.0;
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    const Index3 c = spec.coords(idx);
    for (const auto& e : stencil) {
      const Index3 d{c[0] + e.offset[0], c[1] + e.offset[1], c[2] + e.offset[2]};
      const bool a = cand.contains(c), b = cand.contains(d);
      if (a != b) per += e.weight;
      const Index3 m{c[0] - e.offset[0], c[1] - e.offset[1], c[2] - e.offset[2]};
      if (!spec.in_bounds(m) && a) per += e.weight;
    }
  }
  const auto elems = interface_elements(prev);
  double lin = 0.0;
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    if (!cand.contains(idx)) continue;
    const double d = distance_to_interface(elems, spec.center(idx));
    lin += (prev.contains(idx) ? -d : d) * spec.cell_volume() / h;
  }
  const double v = static_cast<double>(cand.count()) * spec.cell_volume();
  return per + lin + std::abs(v - unit_ball_volume(spec.dim)) / std::sqrt(h);
}

}  // namespace

TEST_CASE("assemble_step linear term") {
  const auto spec = GridSpec::centered(2, {96, 96, 1}, 1.0 / 32);
  ShapeParams p;
  p.radii = {1.0};
  const GridSet ball = make_shape("ball", p, spec);
  const StepEnergy e = assemble_step(ball, 0.01);
  const StepEnergy e2 = assemble_step(ball, 0.005);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    if (ball.contains(idx)) {
      CHECK(e.linear_term[i] < 0);
    } else {
      CHECK(e.linear_term[i] > 0);
    }
    CHECK(e2.linear_term[i] == doctest::Approx(2 * e.linear_term[i]).epsilon(1e-14));
  }
  // Relative form: prev against itself costs exactly P(prev) + penalty.
  const double slack = dissipation_slack(e.prev_perimeter, e.prev_volume, perimeter(ball),
                                         dissipation_term(ball, e), volume(ball), e.h,
                                         e.target_volume);
  CHECK(slack == 0.0);
  CHECK(dissipation_term(ball, e) == 0.0);
  CHECK_THROWS_AS(assemble_step(ball, 0.3), Error);
  try {
    assemble_step(ball, 0.3);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::StepTooLarge);
    CHECK(std::string(err.what()).find("h < (ω/P)²") != std::string::npos);
  }
}

TEST_CASE("energy_of decomposition and reference evaluator") {
  const auto spec = GridSpec::centered(2, {96, 96, 1}, 1.0 / 32);
  ShapeParams p;
  p.radii = {1.0};
  const GridSet ball = make_shape("ball", p, spec);
  const StepEnergy e = assemble_step(ball, 0.01);
  const EnergyTerms t = energy_terms(ball, e);
  CHECK(t.perimeter == perimeter(ball));
  CHECK(t.linear < 0);
  CHECK(t.total == t.perimeter + t.linear + t.penalty);
  CHECK(energy_of(ball, ball, 0.01) == t.total);
  const GridSet empty(spec);
  CHECK(energy_of(empty, e) == std::numbers::pi / std::sqrt(0.01));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s3 = GridSpec::make(2, {5, 5, 1}, 0.9, Point::Zero());
    const GridSet prev = testsupport::random_set(s3, 0.5, rng);
    const GridSet cand = testsupport::random_set(s3, 0.5, rng);
    if (prev.empty()) continue;
    const double ref = reference_energy(cand, prev, 0.05);
    CHECK(energy_of(cand, prev, 0.05) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("exhaustive minimizer trivial cases") {
  const auto spec = GridSpec::make(2, {6, 6, 1}, 0.45, Point::Zero());
  std::vector<std::uint8_t> occ(spec.size(), 0);
  occ[spec.index(2, 2, 0)] = 1;
  const GridSet prev(spec, occ);
  StepEnergy e = assemble_step(prev, 0.01);
  // Strongly negative linear terms fill the region, strongly positive ones empty it.
  e.linear_term.setConstant(-1e6);
  CHECK(exhaustive_step_minimizer(e).count() == 16);
  e.linear_term.setConstant(1e6);
  CHECK(exhaustive_step_minimizer(e).count() == 0);
  const auto big = GridSpec::make(2, {7, 7, 1}, 0.45, Point::Zero());
  std::vector<std::uint8_t> occ2(big.size(), 0);
  occ2[big.index(2, 2, 0)] = 1;
  CHECK_THROWS_AS(exhaustive_step_minimizer(GridSet(big, occ2), 0.001), Error);
}

TEST_CASE("minimize_step matches exhaustive minimization") {
  std::mt19937_64 rng(99);
  int compared = 0, same_set = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const testsupport::TinyInstance in = testsupport::random_tiny(rng);
    const StepEnergy e = assemble_step(in.prev, in.h);
    const GridSet ref = exhaustive_step_minimizer(e);
    const double ref_f = energy_of(ref, e);
    CutSolution sol;
    try {
      sol = minimize_step(e);
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::EmptyMinimizer);
      CHECK(ref.empty());
      continue;
    }
    ++compared;
    if (sol.set == ref) ++same_set;
    CHECK(sol.energy == ref_f);
    CHECK(std::abs(sol.multiplier) <= e.penalty_scale);
  }
  CHECK(compared > 200);
  MESSAGE("identical sets: " << same_set << " of " << compared);
}

TEST_CASE("volume excess drives the set down") {
  const auto spec = GridSpec::centered(2, {96, 96, 1}, 1.0 / 32);
  ShapeParams p;
  p.radii = {1.1};
  const GridSet big = make_shape("ball", p, spec);
  const StepEnergy e = assemble_step(big, 0.005);
  const CutSolution sol = minimize_step(e);
  CHECK((volume(sol.set) < volume(big) || sol.multiplier == -e.penalty_scale));
  CHECK(sol.energy == doctest::Approx(energy_of(sol.set, e)).epsilon(1e-9));
  const double slack = dissipation_slack(e.prev_perimeter, e.prev_volume, perimeter(sol.set),
                                         dissipation_term(sol.set, e), volume(sol.set), e.h,
                                         e.target_volume);
  CHECK(slack >= 0.0);
}

TEST_CASE("calibrated ball is nearly stationary") {
  const auto spec = GridSpec::centered(2, {96, 96, 1}, 1.0 / 32);
  ShapeParams p;
  p.radii = {1.0};
  p.target_volume = std::numbers::pi;
  const GridSet ball = make_shape("ball", p, spec);
  const StepEnergy e = assemble_step(ball, 0.01);
  const CutSolution sol = minimize_step(e);
  CHECK(hausdorff_boundary_distance(sol.set, {{Point::Zero()}, 1.0, 0.0}) <= 2 * spec.spacing);
  CHECK(std::abs(sol.multiplier) <= e.penalty_scale);
  MESSAGE("multiplier " << sol.multiplier << " sym diff " << symmetric_difference_count(sol.set, ball));
}
