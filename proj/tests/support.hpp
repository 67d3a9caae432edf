#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "flatflow/geometry.hpp"
#include "flatflow/grid.hpp"

namespace testsupport {

using flatflow::GridSet;
using flatflow::GridSpec;
using flatflow::Index3;
using flatflow::Point;
using flatflow::perimeter;
using flatflow::unit_ball_volume;

// Occupy cells whose centre satisfies phi < 0; the margin layer stays empty.
inline GridSet rasterize(const GridSpec& spec, const std::function<double(const Point&)>& phi) {
  std::vector<std::uint8_t> occ(spec.size(), 0);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    if (spec.in_margin(spec.coords(idx))) continue;
    occ[idx] = phi(spec.center(idx)) < 0.0;
  }
  return GridSet(spec, std::move(occ));
}

inline GridSet disk(const GridSpec& spec, const Point& c, double r) {
  return rasterize(spec, [&](const Point& p) { return (p - c).norm() - r; });
}

inline GridSet random_set(const GridSpec& spec, double fill, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(fill);
  std::vector<std::uint8_t> occ(spec.size(), 0);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    if (!spec.in_margin(spec.coords(idx))) occ[idx] = coin(rng);
  }
  return GridSet(spec, std::move(occ));
}

struct TinyInstance {
  GridSet prev;
  double h;
};

// Random prev on a small grid whose interior has at most 16 cells, with a
// spacing that makes the unit-ball volume comparable to the interior.
inline TinyInstance random_tiny(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const std::vector<Index3> shapes2 = {{5, 5, 1}, {6, 6, 1}, {5, 6, 1},
                                              {6, 5, 1}, {4, 6, 1}, {5, 7, 1}};
  const bool three = u(rng) < 0.2;
  Index3 shape = three ? Index3{4, 4, u(rng) < 0.5 ? 4 : 6} : shapes2[pick(rng)];
  const int dim = three ? 3 : 2;
  int interior = 1;
  for (int a = 0; a < dim; ++a) interior *= shape[a] - 2;
  const double omega = unit_ball_volume(dim);
  const double fill = 0.8 + 1.2 * u(rng);
  const double s = std::pow(fill * omega / interior, 1.0 / dim);
  const auto spec = GridSpec::make(dim, shape, s, Point(-0.3, 0.1, 0.2));
  for (;;) {
    GridSet prev = random_set(spec, 0.3 + 0.6 * u(rng), rng);
    if (prev.empty()) continue;
    const double bound = std::pow(omega / perimeter(prev), 2);
    return {prev, bound * (0.05 + 0.9 * u(rng))};
  }
}

}  // namespace testsupport
