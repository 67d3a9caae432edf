#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flatflow/distance.hpp"
#include "flatflow/geometry.hpp"
#include "support.hpp"

using namespace flatflow;
using testsupport::disk;
using testsupport::random_set;
using testsupport::rasterize;

namespace {

double seg_dist(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  double t = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  return (p - (a + t * ab)).norm();
}

// Reference marching-squares table: edge pairs per corner mask, edges
// numbered bottom, right, top, left; corners (0,0),(1,0),(1,1),(0,1).
const std::vector<std::vector<std::pair<int, int>>> kTable = {
    {},           {{3, 0}}, {{0, 1}}, {{3, 1}},         {{1, 2}}, {{3, 0}, {1, 2}},
    {{0, 2}},     {{2, 3}}, {{2, 3}}, {{0, 2}},         {{0, 1}, {2, 3}}, {{1, 2}},
    {{1, 3}},     {{0, 1}}, {{3, 0}}, {}};

// Brute-force signed distance under the declared interface convention.
std::vector<double> brute_sdf(const GridSet& set) {
  const auto& spec = set.spec();
  const double s = spec.spacing;
  std::vector<std::pair<Point, Point>> elems;
  if (spec.dim == 2) {
    const Point mid[4] = {{0.5, 0, 0}, {1, 0.5, 0}, {0.5, 1, 0}, {0, 0.5, 0}};
    for (int j = 0; j + 1 < spec.shape[1]; ++j) {
      for (int i = 0; i + 1 < spec.shape[0]; ++i) {
        int mask = 0;
        mask |= set.contains(Index3{i, j, 0}) ? 1 : 0;
        mask |= set.contains(Index3{i + 1, j, 0}) ? 2 : 0;
        mask |= set.contains(Index3{i + 1, j + 1, 0}) ? 4 : 0;
        mask |= set.contains(Index3{i, j + 1, 0}) ? 8 : 0;
        const Point base = spec.center(Index3{i, j, 0});
        for (auto [e0, e1] : kTable[mask]) elems.push_back({base + s * mid[e0], base + s * mid[e1]});
      }
    }
  } else {
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
      const Index3 c = spec.coords(idx);
      for (int a = 0; a < 3; ++a) {
        Index3 d = c;
        d[a] += 1;
        if (!spec.in_bounds(d)) continue;
        if (set.contains(c) != set.contains(d)) {
          const Point m = 0.5 * (spec.center(c) + spec.center(d));
          elems.push_back({m, m});
        }
      }
    }
  }
  std::vector<double> out(spec.size());
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    double best = 1e300;
    for (const auto& [a, b] : elems) best = std::min(best, seg_dist(spec.center(idx), a, b));
    out[idx] = set.contains(idx) ? -best : best;
  }
  return out;
}

}  // namespace

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(GridSpec::make(4, {8, 8, 8}, 0.1, Point::Zero()), Error);
  CHECK_THROWS_AS(GridSpec::make(2, {3, 8, 1}, 0.1, Point::Zero()), Error);
  CHECK_THROWS_AS(GridSpec::make(2, {8, 8, 1}, 0.0, Point::Zero()), Error);
  const auto spec = GridSpec::make(2, {8, 8, 1}, 0.1, Point::Zero());
  std::vector<std::uint8_t> occ(spec.size(), 0);
  occ[0] = 1;
  try {
    GridSet bad(spec, occ);
    FAIL("expected margin violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MarginViolation);
  }
}

TEST_CASE("crofton stencil weights") {
  const auto s2 = GridSpec::centered(2, {8, 8, 1}, 1.0);
  const auto st2 = crofton_stencil(s2);
  CHECK(st2.size() == 8);
  const auto s3 = GridSpec::centered(3, {8, 8, 8}, 1.0);
  const auto st3 = crofton_stencil(s3);
  CHECK(st3.size() == 13);
  // A unit-area plane crosses stencil directions at rate |e.n|; the weights
  // integrate |cos| over the sphere to the plane area (1) on average.
  double sum = 0.0;
  for (const auto& e : st3) {
    const double len = std::sqrt(double(e.offset[0] * e.offset[0] + e.offset[1] * e.offset[1] +
                                        e.offset[2] * e.offset[2]));
    sum += e.weight * len;
  }
  // Sum of w|e| = (1/pi) * (4 pi / 2) = 2.
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("signed distance matches brute force in 2D") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const auto spec = GridSpec::make(2, {24, 20, 1}, 0.05, Point(0.3, -0.2, 0));
    const GridSet set = random_set(spec, 0.15 + 0.12 * trial, rng);
    if (set.empty()) continue;
    const ScalarField d = signed_distance(set);
    const auto ref = brute_sdf(set);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      REQUIRE(d[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("signed distance matches brute force in 3D") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const auto spec = GridSpec::make(3, {12, 10, 9}, 0.1, Point::Zero());
    const GridSet set = random_set(spec, 0.1 + 0.3 * trial, rng);
    const ScalarField d = signed_distance(set);
    const auto ref = brute_sdf(set);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      REQUIRE(d[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("signed distance of a two-cell set and errors") {
  const auto spec = GridSpec::make(2, {16, 16, 1}, 1.0, Point::Zero());
  std::vector<std::uint8_t> occ(spec.size(), 0);
  occ[spec.index(5, 5, 0)] = 1;
  occ[spec.index(9, 7, 0)] = 1;
  const GridSet set(spec, occ);
  const auto d = signed_distance(set);
  const auto ref = brute_sdf(set);
  for (std::size_t i = 0; i < spec.size(); ++i) CHECK(d[i] == doctest::Approx(ref[i]));
  CHECK_THROWS_AS(signed_distance(GridSet(spec)), Error);
}

TEST_CASE("signed distance of a ball") {
  const auto spec = GridSpec::centered(2, {129, 129, 1}, 1.0 / 64);
  const GridSet ball = disk(spec, Point::Zero(), 0.5);
  const auto d = signed_distance(ball);
  CHECK(std::abs(d.interpolate(Point::Zero()) + 0.5) <= spec.spacing);
  CHECK(std::abs(d.interpolate(Point(0.6, 0.8, 0)) - 0.5) <= spec.spacing);
  // Lipschitz bound between adjacent cells.
  for (std::size_t idx = 0; idx + 1 < spec.size(); ++idx) {
    CHECK(std::abs(d[idx] - d[idx + 1]) <= spec.spacing + 2 * spec.spacing);
  }
}

TEST_CASE("volume and perimeter") {
  const auto full = GridSpec::make(2, {10, 10, 1}, 0.1, Point::Zero());
  CHECK(static_cast<double>(full.size()) * full.cell_volume() == doctest::Approx(1.0));
  CHECK(volume(GridSet(full)) == 0.0);
  CHECK_THROWS_AS(perimeter(GridSet(full)), Error);

  const auto spec = GridSpec::centered(2, {300, 300, 1}, 1.0 / 128);
  const GridSet d = disk(spec, Point::Zero(), 1.0);
  CHECK(volume(d) == doctest::Approx(std::numbers::pi).epsilon(0.01));
  CHECK(perimeter(d) == doctest::Approx(2 * std::numbers::pi).epsilon(0.02));

  const auto sq = GridSpec::centered(2, {340, 340, 1}, 1.0 / 160);
  const GridSet square = rasterize(sq, [](const Point& p) {
    return std::max(std::abs(p.x()), std::abs(p.y())) - 1.0;
  });
  CHECK(volume(square) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(perimeter(square) == doctest::Approx(8.0).epsilon(0.02));

  const auto s3 = GridSpec::centered(3, {140, 140, 140}, 1.0 / 64);
  const GridSet sphere = rasterize(s3, [](const Point& p) { return p.norm() - 1.0; });
  CHECK(volume(sphere) == doctest::Approx(4.0 * std::numbers::pi / 3).epsilon(0.01));
  CHECK(perimeter(sphere) == doctest::Approx(4.0 * std::numbers::pi).epsilon(0.03));
}

TEST_CASE("ball calibration at spacing r/64 in 3D") {
  const double r = 0.5;
  const auto spec = GridSpec::centered(3, {140, 140, 140}, r / 64);
  const GridSet ball = rasterize(spec, [&](const Point& p) { return p.norm() - r; });
  CHECK(volume(ball) == doctest::Approx(4.0 * std::numbers::pi / 3 * r * r * r).epsilon(0.01));
  CHECK(perimeter(ball) == doctest::Approx(4.0 * std::numbers::pi * r * r).epsilon(0.03));
  const auto cs = mean_curvature_samples(ball, 3 * spec.spacing);
  double wsum = 0, hsum = 0;
  for (const auto& smp : cs.samples) {
    wsum += smp.area_weight;
    hsum += smp.area_weight * smp.curvature;
  }
  CHECK(hsum / wsum == doctest::Approx(2.0 / r).epsilon(0.08));
}

TEST_CASE("erosion and dilation") {
  const auto spec = GridSpec::centered(2, {160, 160, 1}, 1.0 / 128);
  const GridSet ball = disk(spec, Point::Zero(), 0.5);
  const GridSet er = erode(ball, 0.2);
  const BallUnion target{{Point::Zero()}, 0.3, 0.0};
  CHECK(hausdorff_symmetric(er, target) <= spec.spacing);

  // Monotonicity and inclusions on a non-convex set.
  const GridSet shape = rasterize(spec, [](const Point& p) {
    const double a = std::atan2(p.y(), p.x());
    return p.norm() - (0.45 + 0.12 * std::cos(5 * a));
  });
  const GridSet e1 = erode(shape, 0.05), e2 = erode(shape, 0.1);
  CHECK(is_subset(e2, e1));
  CHECK(is_subset(e1, shape));
  CHECK(is_subset(dilate(shape, 0.02), dilate(shape, 0.05)));
  CHECK(is_subset(shape, dilate(shape, 0.02)));
  for (double r : {0.05, 0.1, 0.15}) {
    const GridSet er2 = erode(shape, r);
    CHECK(is_subset(dilate(er2, r, DilateMode::CellCentres), shape));
    for (double rho : {0.02, 0.04}) {
      CHECK(is_subset(dilate(er2, rho, DilateMode::CellCentres), erode(shape, r - rho)));
      // The interface mode agrees up to a thin shell of cells.
      const GridSet a = dilate(er2, rho), b = erode(shape, r - rho);
      const GridSet b_wide = dilate(b, 1.5 * spec.spacing, DilateMode::CellCentres);
      CHECK(is_subset(a, b_wide));
    }
  }
  CHECK(erode(ball, 1.0).empty());
}

TEST_CASE("cube erosion law") {
  const auto s2 = GridSpec::centered(2, {340, 340, 1}, 1.0 / 160);
  const GridSet q2 = rasterize(s2, [](const Point& p) {
    return std::max(std::abs(p.x()), std::abs(p.y())) - 1.0;
  });
  const auto d2 = signed_distance(q2);
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}) {
    CHECK(volume(erode(q2, r, d2)) / volume(q2) == doctest::Approx(std::pow(1 - r, 2)).epsilon(0.02));
  }
  const auto s3 = GridSpec::centered(3, {164, 164, 164}, 1.0 / 80);
  const GridSet q3 = rasterize(s3, [](const Point& p) { return p.cwiseAbs().maxCoeff() - 1.0; });
  const auto d3 = signed_distance(q3);
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}) {
    CHECK(volume(erode(q3, r, d3)) / volume(q3) == doctest::Approx(std::pow(1 - r, 3)).epsilon(0.02));
  }
}

TEST_CASE("curvature samples") {
  const auto spec = GridSpec::centered(2, {300, 300, 1}, 1.0 / 128);
  const GridSet d = disk(spec, Point::Zero(), 1.0);
  const auto cs = mean_curvature_samples(d, 3 * spec.spacing);
  double wsum = cs.dropped_weight, hsum = 0, hw = 0;
  for (const auto& smp : cs.samples) {
    CHECK(smp.area_weight > 0);
    CHECK(smp.normal.norm() == doctest::Approx(1.0).epsilon(1e-9));
    wsum += smp.area_weight;
    hsum += smp.area_weight * smp.curvature;
    hw += smp.area_weight;
    CHECK(smp.normal.dot(smp.position.normalized()) > 0.95);
  }
  CHECK(wsum == doctest::Approx(perimeter(d)).epsilon(1e-9));
  CHECK(hsum / hw == doctest::Approx(1.0).epsilon(0.05));
  CHECK(cs.dropped_fraction() == 0.0);
  CHECK_THROWS_AS(mean_curvature_samples(d, 0.5 * spec.spacing), Error);

  // Flat faces of a large square: interior face samples have H near zero.
  const auto sq = GridSpec::centered(2, {200, 200, 1}, 1.0 / 64);
  const GridSet square = rasterize(sq, [](const Point& p) {
    return std::max(std::abs(p.x()), std::abs(p.y())) - 1.2;
  });
  const double sm = 3 * sq.spacing;
  const auto fs = mean_curvature_samples(square, sm);
  int checked = 0;
  for (const auto& smp : fs.samples) {
    if (std::abs(smp.position.x()) < 0.8 && std::abs(smp.position.y()) > 1.1) {
      CHECK(std::abs(smp.curvature) <= 0.1 / sm);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("curvature samples are taken per component") {
  const double r = 0.5, s = r / 64, sm = r / 3;
  const auto spec = GridSpec::centered(2, {410, 410, 1}, s);
  const Point a(-0.8, 0.1, 0), b(0.8, 0.1, 0);
  const GridSet one = rasterize(spec, [&](const Point& p) { return (p - a).norm() - r; });
  const GridSet two = rasterize(spec, [&](const Point& p) {
    return std::min((p - a).norm(), (p - b).norm()) - r;
  });
  auto l1 = [&](const CurvatureSampling& cs) {
    double sum = 0;
    for (const auto& smp : cs.samples) sum += smp.area_weight * std::abs(smp.curvature - 1 / r);
    return sum;
  };
  const auto cs1 = mean_curvature_samples(one, sm);
  const auto cs2 = mean_curvature_samples(two, sm);
  CHECK(cs2.total_weight == doctest::Approx(perimeter(two)).epsilon(1e-12));
  // The facing arcs must not see the neighbour through the smoothing window.
  CHECK(l1(cs2) == doctest::Approx(2 * l1(cs1)).epsilon(0.1));
  CHECK(l1(mean_curvature_samples(two, sm, signed_distance(two))) > 2 * l1(cs2));

  // Components touching only along a diagonal share no cut pairs.
  const auto small = GridSpec::centered(2, {8, 8, 1}, 1.0);
  std::vector<std::uint8_t> occ(small.size(), 0);
  occ[small.index(2, 2, 0)] = occ[small.index(3, 3, 0)] = 1;
  const GridSet diag(small, occ);
  CHECK(mean_curvature_samples(diag, 1.0).total_weight ==
        doctest::Approx(perimeter(diag)).epsilon(1e-12));
}

TEST_CASE("connected components") {
  const auto spec = GridSpec::centered(2, {64, 64, 1}, 1.0 / 16);
  const GridSet two = rasterize(spec, [](const Point& p) {
    return std::min((p - Point(-0.8, 0, 0)).norm(), (p - Point(0.8, 0, 0)).norm()) - 0.5;
  });
  const auto comps = connected_components(two);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].count() + comps[1].count() == two.count());
  CHECK(symmetric_difference_count(comps[0], comps[1]) == two.count());
  CHECK(connected_components(disk(spec, Point::Zero(), 0.5)).size() == 1);

  std::vector<std::uint8_t> occ(spec.size(), 0);
  int k = 0;
  for (int j = 2; j < 20; j += 2)
    for (int i = 2; i < 20; i += 2) {
      occ[spec.index(i + (j % 4 == 0 ? 1 : 0), j, 0)] = 1;
      ++k;
    }
  CHECK(connected_components(GridSet(spec, occ)).size() == static_cast<std::size_t>(k));
}

TEST_CASE("hausdorff boundary distance") {
  const auto spec = GridSpec::centered(2, {160, 160, 1}, 1.0 / 128);
  const GridSet ball = disk(spec, Point::Zero(), 0.5);
  CHECK(hausdorff_boundary_distance(ball, {{Point::Zero()}, 0.5, 0.0}) <= spec.spacing);
  CHECK(std::abs(hausdorff_boundary_distance(ball, {{Point::Zero()}, 0.4, 0.0}) - 0.1) <=
        spec.spacing);
  CHECK(hausdorff_symmetric(ball, {{Point::Zero()}, 0.5, 0.0}) <= spec.spacing);
  CHECK_THROWS_AS(hausdorff_boundary_distance(GridSet(spec), {{Point::Zero()}, 0.5, 0.0}), Error);

  // Dumbbell versus two balls: compare with a direct scan of face pairs.
  const auto sp2 = GridSpec::centered(2, {200, 120, 1}, 1.0 / 64);
  const GridSet dumbbell = rasterize(sp2, [](const Point& p) {
    const double b = std::min((p - Point(-0.7, 0, 0)).norm(), (p - Point(0.7, 0, 0)).norm()) - 0.45;
    const double neck = std::max(std::abs(p.x()) - 0.7, std::abs(p.y()) - 0.08);
    return std::min(b, neck);
  });
  const BallUnion fit{{Point(-0.7, 0, 0), Point(0.7, 0, 0)}, 0.45, 0.0};
  double ref = 0;
  for (std::size_t idx = 0; idx < sp2.size(); ++idx) {
    const Index3 c = sp2.coords(idx);
    for (int a = 0; a < 2; ++a) {
      Index3 d = c;
      d[a] += 1;
      if (!sp2.in_bounds(d) || dumbbell.contains(c) == dumbbell.contains(d)) continue;
      const Point m = 0.5 * (sp2.center(c) + sp2.center(d));
      const double d1 = std::abs((m - fit.centers[0]).norm() - 0.45);
      const double d2 = std::abs((m - fit.centers[1]).norm() - 0.45);
      const bool in1 = (m - fit.centers[0]).norm() < 0.45, in2 = (m - fit.centers[1]).norm() < 0.45;
      double dist = std::min(d1, d2);
      if (in1) dist = d1;
      if (in2) dist = d2;
      ref = std::max(ref, dist);
    }
  }
  CHECK(hausdorff_boundary_distance(dumbbell, fit) == doctest::Approx(ref).epsilon(1e-12));
}
