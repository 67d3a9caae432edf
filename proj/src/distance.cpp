#include "flatflow/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace flatflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Refinement factor of the seed lattice. In 2D every nearest point of a
// marching-squares segment to a cell centre sits on the quarter lattice.
int refinement(int dim) { return dim == 2 ? 4 : 2; }

struct Seg2 {
  std::array<int, 2> a;  // endpoints in half-cell units relative to the dual square
  std::array<int, 2> b;
};

// Edge midpoints of the dual square with corners (0,0),(2,0),(2,2),(0,2) in
// half-cell units, numbered bottom, right, top, left.
constexpr std::array<std::array<int, 2>, 4> kEdgeMid = {{{1, 0}, {2, 1}, {1, 2}, {0, 1}}};

// Marching-squares segments for a corner mask (bit k set = corner k inside,
// corners counter-clockwise from the lower left).
std::vector<Seg2> square_segments(int mask) {
  std::vector<Seg2> out;
  auto cut = [&](int k) { out.push_back({kEdgeMid[(k + 3) % 4], kEdgeMid[k]}); };
  const int count = __builtin_popcount(static_cast<unsigned>(mask));
  if (count == 0 || count == 4) return out;
  if (count == 1) {
    for (int k = 0; k < 4; ++k)
      if (mask & (1 << k)) cut(k);
  } else if (count == 3) {
    for (int k = 0; k < 4; ++k)
      if (!(mask & (1 << k))) cut(k);
  } else if (mask == 0b0101 || mask == 0b1010) {
    for (int k = 0; k < 4; ++k)
      if (mask & (1 << k)) cut(k);
  } else {
    for (int k = 0; k < 4; ++k) {
      if ((mask & (1 << k)) && (mask & (1 << ((k + 1) % 4)))) {
        out.push_back({kEdgeMid[(k + 3) % 4], kEdgeMid[(k + 1) % 4]});
      }
    }
  }
  return out;
}

int corner_mask(const GridSet& set, int i, int j) {
  const auto& spec = set.spec();
  int mask = 0;
  const std::array<std::array<int, 2>, 4> corners = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  for (int k = 0; k < 4; ++k) {
    if (set.contains(spec.index(i + corners[k][0], j + corners[k][1], 0))) mask |= 1 << k;
  }
  return mask;
}

template <class Fn>
void for_each_face_pair(const GridSet& set, Fn&& fn) {
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const Index3 c = spec.coords(idx);
    for (int a = 0; a < spec.dim; ++a) {
      if (c[a] + 1 >= spec.shape[a]) continue;
      Index3 d = c;
      d[a] += 1;
      const std::size_t jdx = spec.index(d);
      if (occ[idx] != occ[jdx]) fn(c, a);
    }
  }
}

void check_interface(const GridSet& set) {
  const std::size_t n = set.count();
  if (n == 0) throw Error(ErrorCode::EmptySet, "set has no occupied cells");
  if (n == set.spec().size()) throw Error(ErrorCode::FullGrid, "set fills the grid");
}

// Exact 1D squared distance transform (lower envelope of parabolas) of f,
// read with stride `in_stride`, evaluated at q = 0, step, 2*step, ...
void envelope(const double* f, int n, std::ptrdiff_t in_stride, double* out,
              std::ptrdiff_t out_stride, int step, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * in_stride];
    if (!std::isfinite(fq)) continue;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[k];
      const double fp = f[p * in_stride];
      s = ((fq + double(q) * q) - (fp + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  const int n_out = (n - 1) / step + 1;
  if (k < 0) {
    for (int o = 0; o < n_out; ++o) out[o * out_stride] = kInf;
    return;
  }
  int j = 0;
  for (int o = 0; o < n_out; ++o) {
    const double q = double(o) * step;
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[o * out_stride] = d * d + f[v[j] * in_stride];
  }
}

}  // namespace

std::vector<InterfaceElement> interface_elements(const GridSet& set) {
  const auto& spec = set.spec();
  std::vector<InterfaceElement> out;
  if (spec.dim == 2) {
    for (int j = 0; j + 1 < spec.shape[1]; ++j) {
      for (int i = 0; i + 1 < spec.shape[0]; ++i) {
        for (const auto& sg : square_segments(corner_mask(set, i, j))) {
          const Point base = spec.center(Index3{i, j, 0});
          const double h = 0.5 * spec.spacing;
          out.push_back({base + h * Point(sg.a[0], sg.a[1], 0.0),
                         base + h * Point(sg.b[0], sg.b[1], 0.0)});
        }
      }
    }
  } else {
    for_each_face_pair(set, [&](const Index3& c, int a) {
      Point p = spec.center(c);
      p[a] += 0.5 * spec.spacing;
      out.push_back({p, p});
    });
  }
  return out;
}

double distance_to_interface(const std::vector<InterfaceElement>& elems, const Point& p) {
  double best = kInf;
  for (const auto& e : elems) {
    const Point ab = e.b - e.a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - e.a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (e.a + t * ab)).squaredNorm());
  }
  return std::sqrt(best);
}

Eigen::ArrayXd squared_distance_transform(const std::vector<std::uint8_t>& seeds,
                                          const Index3& fine, int dim, int stride) {
  Index3 coarse{1, 1, 1};
  for (int a = 0; a < dim; ++a) coarse[a] = (fine[a] - 1) / stride + 1;
  const int fz = dim == 3 ? fine[2] : 1;

  // Axis 0: plain nearest-seed scan along every fine line, kept at coarse x.
  Eigen::ArrayXd a0(static_cast<Eigen::Index>(coarse[0]) * fine[1] * fz);
  std::vector<double> left(fine[0]), right(fine[0]);
  for (int z = 0; z < fz; ++z) {
    for (int y = 0; y < fine[1]; ++y) {
      const std::size_t row = (static_cast<std::size_t>(z) * fine[1] + y) * fine[0];
      double last = -kInf;
      for (int x = 0; x < fine[0]; ++x) {
        if (seeds[row + x]) last = x;
        left[x] = x - last;
      }
      last = kInf;
      for (int x = fine[0] - 1; x >= 0; --x) {
        if (seeds[row + x]) last = x;
        right[x] = last - x;
      }
      const std::size_t orow = (static_cast<std::size_t>(z) * fine[1] + y) * coarse[0];
      for (int o = 0; o < coarse[0]; ++o) {
        const double d = std::min(left[o * stride], right[o * stride]);
        a0[static_cast<Eigen::Index>(orow + o)] = std::isfinite(d) ? d * d : kInf;
      }
    }
  }

  const int longest = std::max({fine[0], fine[1], fz});
  std::vector<int> v(longest);
  std::vector<double> zb(longest + 1);

  // Axis 1: lines along fine y at each coarse x, kept at coarse y.
  Eigen::ArrayXd a1(static_cast<Eigen::Index>(coarse[0]) * coarse[1] * fz);
  for (int z = 0; z < fz; ++z) {
    for (int x = 0; x < coarse[0]; ++x) {
      const double* in = a0.data() + static_cast<std::ptrdiff_t>(z) * fine[1] * coarse[0] + x;
      double* out = a1.data() + static_cast<std::ptrdiff_t>(z) * coarse[1] * coarse[0] + x;
      envelope(in, fine[1], coarse[0], out, coarse[0], stride, v, zb);
    }
  }
  if (dim == 2) return a1;

  // Axis 2: lines along fine z at each coarse (x, y).
  Eigen::ArrayXd a2(static_cast<Eigen::Index>(coarse[0]) * coarse[1] * coarse[2]);
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(coarse[0]) * coarse[1];
  for (std::ptrdiff_t xy = 0; xy < plane; ++xy) {
    envelope(a1.data() + xy, fz, plane, a2.data() + xy, plane, stride, v, zb);
  }
  return a2;
}

ScalarField signed_distance(const GridSet& set) {
  check_interface(set);
  const auto& spec = set.spec();
  const int m = refinement(spec.dim);
  Index3 fine{1, 1, 1};
  for (int a = 0; a < spec.dim; ++a) fine[a] = m * (spec.shape[a] - 1) + 1;
  std::vector<std::uint8_t> seeds(static_cast<std::size_t>(fine[0]) * fine[1] * fine[2], 0);
  auto mark = [&](int x, int y, int z) {
    seeds[(static_cast<std::size_t>(z) * fine[1] + y) * fine[0] + x] = 1;
  };

  if (spec.dim == 2) {
    // Segment endpoints are in half-cell units; m / 2 fine points per unit.
    const int hm = m / 2;
    for (int j = 0; j + 1 < spec.shape[1]; ++j) {
      for (int i = 0; i + 1 < spec.shape[0]; ++i) {
        for (const auto& sg : square_segments(corner_mask(set, i, j))) {
          const int ax = m * i + hm * sg.a[0], ay = m * j + hm * sg.a[1];
          const int bx = m * i + hm * sg.b[0], by = m * j + hm * sg.b[1];
          const int steps = std::max(std::abs(bx - ax), std::abs(by - ay));
          const int sx = (bx - ax) / steps, sy = (by - ay) / steps;
          for (int t = 0; t <= steps; ++t) mark(ax + t * sx, ay + t * sy, 0);
        }
      }
    }
  } else {
    for_each_face_pair(set, [&](const Index3& c, int a) {
      Index3 f{m * c[0], m * c[1], m * c[2]};
      f[a] += m / 2;
      mark(f[0], f[1], f[2]);
    });
  }

  const Eigen::ArrayXd sq = squared_distance_transform(seeds, fine, spec.dim, m);
  ScalarField out(spec);
  const double scale = spec.spacing / m;
  const auto& occ = set.occupancy();
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const double d = std::sqrt(sq[static_cast<Eigen::Index>(idx)]) * scale;
    out[idx] = occ[idx] ? -d : d;
  }
  return out;
}

}  // namespace flatflow
