#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flatflow/geometry.hpp"
#include "flatflow/oracle.hpp"

using namespace flatflow;

TEST_CASE("ball ODE initial multiplier and velocities") {
  // Planar disks: n = 1, λ = Σ 1 / Σ r.
  const BallSystem plane{1, {0.8, 0.6}};
  CHECK(plane.lambda() == doctest::Approx(1.4285714285714286).epsilon(1e-12));
  CHECK(plane.lambda() - 1.0 / 0.8 == doctest::Approx(0.17857142857142858).epsilon(1e-12));
  CHECK(plane.lambda() - 1.0 / 0.6 == doctest::Approx(-0.23809523809523808).epsilon(1e-12));
  const BallSystem space{2, {1.0, 1.0}};
  CHECK(space.lambda() == doctest::Approx(2.0));
}

TEST_CASE("ball ODE conserves volume and orders radii") {
  const auto traj = ball_ode_integrate({0.8, 0.6}, 1, 0.2, 1e-3);
  const double v0 = BallSystem{1, traj.radii.front()}.volume_sum();
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const BallSystem s{1, traj.radii[k]};
    CHECK(s.volume_sum() == doctest::Approx(v0).epsilon(1e-8));
    if (k > 0) {
      CHECK(traj.radii[k][0] > traj.radii[k - 1][0]);
      CHECK(traj.radii[k][1] < traj.radii[k - 1][1]);
    }
  }
  CHECK(traj.times.back() == doctest::Approx(0.2));
  CHECK(traj.events.empty());
}

TEST_CASE("ball ODE is fourth order") {
  // Error against a fine reference drops by about 2^4 when dt halves.
  const double horizon = 0.128;
  auto r_at = [&](double dt) {
    return ball_ode_integrate({0.8, 0.6}, 1, horizon, dt).radii.back()[1];
  };
  const double ref = r_at(1e-4);
  const double e1 = std::abs(r_at(0.016) - ref);
  const double e2 = std::abs(r_at(0.008) - ref);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("equal radii stay fixed") {
  const auto traj = ball_ode_integrate({0.5, 0.5, 0.5}, 2, 0.3, 1e-3);
  for (double r : traj.radii.back()) CHECK(r == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("small ball goes extinct and is logged") {
  const auto traj = ball_ode_integrate({1.0, 0.3}, 1, 1.0, 1e-3);
  REQUIRE(traj.events.size() == 1);
  CHECK(traj.events[0].ball == 1);
  CHECK(traj.events[0].lost_volume_sum < 1e-5);
  CHECK(traj.radii.back()[1] == 0.0);
  const double v0 = 1.0 + 0.09;
  CHECK(traj.radii.back()[0] * traj.radii.back()[0] ==
        doctest::Approx(v0).epsilon(1e-4));
  const auto mid = trajectory_radii_at(traj, 0.0005);
  CHECK(mid[0] > 1.0);
}

TEST_CASE("ODE rejects bad input") {
  CHECK_THROWS_AS(ball_ode_integrate({}, 1, 1.0), Error);
  CHECK_THROWS_AS(ball_ode_integrate({0.5, -1.0}, 1, 1.0), Error);
  CHECK_THROWS_AS(ball_ode_integrate({0.5}, 0, 1.0), Error);
}

TEST_CASE("make_shape volumes and parameter checks") {
  const auto spec = GridSpec::centered(2, {200, 200, 1}, 1.0 / 64);
  ShapeParams p;
  p.radii = {1.0};
  CHECK(volume(make_shape("ball", p, spec)) == doctest::Approx(std::numbers::pi).epsilon(0.01));
  p.target_volume = std::numbers::pi;
  const double cv = spec.cell_volume();
  CHECK(std::abs(volume(make_shape("ball", p, spec)) - std::numbers::pi) <= 0.5 * cv);

  ShapeParams cube;
  cube.side = 2.0;
  CHECK(volume(make_shape("cube", cube, spec)) == doctest::Approx(4.0).epsilon(0.01));

  ShapeParams u;
  u.centers = {Point(-1.0, 0, 0), Point(1.0, 0, 0)};
  u.radii = {0.5};
  const GridSet two = make_shape("ball_union", u, spec);
  CHECK(connected_components(two).size() == 2);
  u.radii = {1.0};
  CHECK_THROWS_AS(make_shape("ball_union", u, spec), Error);

  ShapeParams d;
  d.centers = {Point(-0.9, 0, 0), Point(0.9, 0, 0)};
  d.radii = {0.6};
  d.neck_width = 0.15;
  CHECK(connected_components(make_shape("dumbbell", d, spec)).size() == 1);
  d.neck_width = 0.0;
  CHECK_THROWS_AS(make_shape("dumbbell", d, spec), Error);
  d.neck_width = 1.2;
  CHECK_THROWS_AS(make_shape("dumbbell", d, spec), Error);

  ShapeParams big;
  big.radii = {1.6};
  CHECK_THROWS_AS(make_shape("ball", big, spec), Error);
  CHECK_THROWS_AS(make_shape("torus", p, spec), Error);

  ShapeParams noisy;
  noisy.radii = {1.0};
  noisy.noise_amplitude = 0.1;
  noisy.seed = 7;
  const GridSet n1 = make_shape("noisy_ball", noisy, spec);
  CHECK(n1 == make_shape("noisy_ball", noisy, spec));
  noisy.seed = 8;
  CHECK(!(n1 == make_shape("noisy_ball", noisy, spec)));
}
