#include "flatflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flatflow/distance.hpp"

namespace flatflow {

double volume(const GridSet& set) {
  return static_cast<double>(set.count()) * set.spec().cell_volume();
}

double perimeter(const GridSet& set) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "perimeter of an empty set");
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  const auto stencil = crofton_stencil(spec);
  double total = 0.0;
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const Index3 c = spec.coords(idx);
    for (const auto& e : stencil) {
      const Index3 d{c[0] + e.offset[0], c[1] + e.offset[1], c[2] + e.offset[2]};
      if (spec.in_bounds(d)) {
        if (occ[idx] != occ[spec.index(d)]) total += e.weight;
      } else if (occ[idx]) {
        total += e.weight;
      }
      // Long stencil pairs can leave the grid on the negative side too.
      const Index3 b{c[0] - e.offset[0], c[1] - e.offset[1], c[2] - e.offset[2]};
      if (!spec.in_bounds(b) && occ[idx]) total += e.weight;
    }
  }
  return total;
}

GridSet erode(const GridSet& set, double r) {
  if (set.empty()) return GridSet(set.spec());
  return erode(set, r, signed_distance(set));
}

GridSet erode(const GridSet& set, double r, const ScalarField& sdf) {
  if (r < 0.0) throw Error(ErrorCode::RangeError, "erosion radius must be nonnegative");
  const auto& occ = set.occupancy();
  std::vector<std::uint8_t> out(occ.size(), 0);
  for (std::size_t idx = 0; idx < occ.size(); ++idx) out[idx] = occ[idx] && sdf[idx] < -r;
  return GridSet(set.spec(), std::move(out));
}

GridSet dilate(const GridSet& set, double rho, DilateMode mode) {
  if (rho < 0.0) throw Error(ErrorCode::RangeError, "dilation radius must be nonnegative");
  if (set.empty()) return set;
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  Eigen::ArrayXd dist;
  if (mode == DilateMode::Interface) {
    dist = signed_distance(set).values;
  } else {
    const Eigen::ArrayXd sq = squared_distance_transform(occ, spec.shape, spec.dim, 1);
    dist = sq.sqrt() * spec.spacing;
  }
  std::vector<std::uint8_t> out(occ.size(), 0);
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    out[idx] = occ[idx] || (dist[i] < rho && !spec.in_margin(spec.coords(idx)));
  }
  return GridSet(spec, std::move(out));
}

ScalarField gaussian_smooth(const ScalarField& field, double sigma) {
  const auto& spec = field.spec;
  const double sc = sigma / spec.spacing;
  const int radius = static_cast<int>(std::ceil(3.0 * sc));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * t * t / (sc * sc));
    norm += kernel[t + radius];
  }
  for (double& k : kernel) k /= norm;

  ScalarField cur = field;
  ScalarField next(spec);
  for (int a = 0; a < spec.dim; ++a) {
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
      const Index3 c = spec.coords(idx);
      const int last = spec.shape[a] - 1;
      auto at = [&](int j) {
        Index3 d = c;
        d[a] = std::clamp(j, 0, last);
        return cur[spec.index(d)];
      };
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int j = c[a] + t;
        double v;
        if (j < 0) {
          v = 2.0 * at(0) - at(-j);
        } else if (j > last) {
          v = 2.0 * at(last) - at(2 * last - j);
        } else {
          v = at(j);
        }
        acc += kernel[t + radius] * v;
      }
      next[idx] = acc;
    }
    std::swap(cur, next);
  }
  return cur;
}

namespace {

// Derivatives of a smoothed distance field at cell centres, evaluated lazily.
class CurvatureProbe {
 public:
  explicit CurvatureProbe(const ScalarField& phi)
      : phi_(phi), spec_(phi.spec), done_(spec_.size(), 0), h_(spec_.size()), g_(spec_.size()) {}

  void eval(std::size_t idx, double& h, Eigen::Vector3d& g) {
    if (!done_[idx]) compute(idx);
    h = h_[idx];
    g = g_[idx];
  }

 private:
  double at(Index3 c, int a, int da, int b = 0, int db = 0) const {
    c[a] += da;
    if (db != 0) c[b] += db;
    for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k], 0, spec_.shape[k] - 1);
    return phi_[spec_.index(c)];
  }

  void compute(std::size_t idx) {
    const Index3 c = spec_.coords(idx);
    const int dim = spec_.dim;
    const double s = spec_.spacing;
    const double f0 = phi_[idx];
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    for (int a = 0; a < dim; ++a) {
      const double fp = at(c, a, 1), fm = at(c, a, -1);
      g[a] = (fp - fm) / (2.0 * s);
      hess(a, a) = (fp - 2.0 * f0 + fm) / (s * s);
      for (int b = a + 1; b < dim; ++b) {
        const double v = (at(c, a, 1, b, 1) - at(c, a, 1, b, -1) - at(c, a, -1, b, 1) +
                          at(c, a, -1, b, -1)) /
                         (4.0 * s * s);
        hess(a, b) = v;
        hess(b, a) = v;
      }
    }
    const double g2 = g.squaredNorm();
    double h = 0.0;
    if (g2 > 0.0) {
      h = (g2 * hess.trace() - g.dot(hess * g)) / std::pow(g2, 1.5);
    }
    h_[idx] = h;
    g_[idx] = g;
    done_[idx] = 1;
  }

  const ScalarField& phi_;
  const GridSpec& spec_;
  std::vector<std::uint8_t> done_;
  std::vector<double> h_;
  std::vector<Eigen::Vector3d> g_;
};

// Cells flagged in `foreign` belong to another component of the enclosing set,
// so pairs ending there are not cuts of that set and are skipped.
CurvatureSampling sample_curvature(const GridSet& set, double smoothing, const ScalarField& sdf,
                                   const std::vector<std::uint8_t>* foreign) {
  const auto& spec = set.spec();
  if (!(smoothing >= spec.spacing)) {
    throw Error(ErrorCode::RangeError, "smoothing must be at least one cell");
  }
  const ScalarField phi = gaussian_smooth(sdf, smoothing);
  CurvatureProbe probe(phi);
  CurvatureSampling out;
  out.smoothing = smoothing;
  const auto stencil = crofton_stencil(spec);
  const auto& occ = set.occupancy();
  const int corners = 1 << spec.dim;

  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const Index3 c = spec.coords(idx);
    for (const auto& e : stencil) {
      const Index3 d{c[0] + e.offset[0], c[1] + e.offset[1], c[2] + e.offset[2]};
      const Index3 b{c[0] - e.offset[0], c[1] - e.offset[1], c[2] - e.offset[2]};
      if (occ[idx] && !spec.in_bounds(b)) {
        out.total_weight += e.weight;
        out.dropped_weight += e.weight;
      }
      if (!spec.in_bounds(d)) {
        if (occ[idx]) {
          out.total_weight += e.weight;
          out.dropped_weight += e.weight;
        }
        continue;
      }
      const std::size_t jdx = spec.index(d);
      if (bool(occ[idx]) == bool(occ[jdx])) continue;
      const std::size_t in = occ[idx] ? idx : jdx;
      const std::size_t outc = occ[idx] ? jdx : idx;
      if (foreign && (*foreign)[outc]) continue;
      out.total_weight += e.weight;

      const double di = sdf[in], dout = sdf[outc];
      const double t = di / (di - dout);
      const Point pos = spec.center(in) + t * (spec.center(outc) - spec.center(in));

      // Multilinear interpolation of H and the gradient from the cell corners.
      const Eigen::Vector3d gpos = spec.to_grid(pos);
      Index3 base{0, 0, 0};
      Eigen::Vector3d frac = Eigen::Vector3d::Zero();
      for (int a = 0; a < spec.dim; ++a) {
        const double v = std::clamp(gpos[a], 0.0, double(spec.shape[a] - 1));
        base[a] = std::min(static_cast<int>(std::floor(v)), spec.shape[a] - 2);
        frac[a] = v - base[a];
      }
      double hval = 0.0;
      Eigen::Vector3d grad = Eigen::Vector3d::Zero();
      for (int k = 0; k < corners; ++k) {
        Index3 q = base;
        double w = 1.0;
        for (int a = 0; a < spec.dim; ++a) {
          const int bit = (k >> a) & 1;
          q[a] += bit;
          w *= bit ? frac[a] : 1.0 - frac[a];
        }
        double hq;
        Eigen::Vector3d gq;
        probe.eval(spec.index(q), hq, gq);
        hval += w * hq;
        grad += w * gq;
      }
      const double gn = grad.norm();
      if (gn < 0.5) {
        out.dropped_weight += e.weight;
        continue;
      }
      out.samples.push_back({pos, e.weight, hval, grad / gn});
    }
  }
  return out;
}

}  // namespace

CurvatureSampling mean_curvature_samples(const GridSet& set, double smoothing) {
  const auto& spec = set.spec();
  std::vector<int> labels;
  const int m = label_components(set, labels);
  if (m <= 1) return sample_curvature(set, smoothing, signed_distance(set), nullptr);
  if (!(smoothing >= spec.spacing)) {
    throw Error(ErrorCode::RangeError, "smoothing must be at least one cell");
  }
  // Each component gets its own signed distance on a cropped grid, so the
  // smoothing never reaches across the medial ridge to a neighbour.
  std::vector<Index3> lo(m, spec.shape), hi(m, Index3{-1, -1, -1});
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] < 0) continue;
    const Index3 c = spec.coords(idx);
    for (int a = 0; a < 3; ++a) {
      lo[labels[idx]][a] = std::min(lo[labels[idx]][a], c[a]);
      hi[labels[idx]][a] = std::max(hi[labels[idx]][a], c[a]);
    }
  }
  const int pad = static_cast<int>(std::ceil(4.0 * smoothing / spec.spacing)) + 3;
  CurvatureSampling out;
  out.smoothing = smoothing;
  for (int k = 0; k < m; ++k) {
    Index3 a0{0, 0, 0}, shape{1, 1, 1};
    for (int a = 0; a < spec.dim; ++a) {
      a0[a] = std::max(0, lo[k][a] - pad);
      shape[a] = std::min(spec.shape[a] - 1, hi[k][a] + pad) - a0[a] + 1;
    }
    const GridSpec sub = GridSpec::make(spec.dim, shape, spec.spacing, spec.center(a0));
    std::vector<std::uint8_t> occ(sub.size(), 0), foreign(sub.size(), 0);
    for (std::size_t j = 0; j < sub.size(); ++j) {
      const Index3 c = sub.coords(j);
      const int label = labels[spec.index(c[0] + a0[0], c[1] + a0[1], c[2] + a0[2])];
      occ[j] = label == k;
      foreign[j] = label >= 0 && label != k;
    }
    const GridSet part(sub, std::move(occ));
    const CurvatureSampling cs = sample_curvature(part, smoothing, signed_distance(part), &foreign);
    out.samples.insert(out.samples.end(), cs.samples.begin(), cs.samples.end());
    out.dropped_weight += cs.dropped_weight;
    out.total_weight += cs.total_weight;
  }
  return out;
}

CurvatureSampling mean_curvature_samples(const GridSet& set, double smoothing,
                                         const ScalarField& sdf) {
  return sample_curvature(set, smoothing, sdf, nullptr);
}

std::vector<BoundarySample> interface_measure(const GridSet& set, const ScalarField& sdf) {
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  std::vector<BoundarySample> out;
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    if (!occ[idx]) continue;
    const Index3 c = spec.coords(idx);
    for (const auto& e : crofton_stencil(spec)) {
      for (int sgn : {1, -1}) {
        const Index3 d{c[0] + sgn * e.offset[0], c[1] + sgn * e.offset[1],
                       c[2] + sgn * e.offset[2]};
        if (!spec.in_bounds(d)) continue;
        const std::size_t jdx = spec.index(d);
        if (occ[jdx]) continue;
        const double di = sdf[idx], dout = sdf[jdx];
        const double t = di / (di - dout);
        const Point pos = spec.center(idx) + t * (spec.center(jdx) - spec.center(idx));
        out.push_back({pos, e.weight, 0.0, Point::Zero()});
      }
    }
  }
  return out;
}

int label_components(const GridSet& set, std::vector<int>& labels) {
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  labels.assign(occ.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < occ.size(); ++seed) {
    if (!occ[seed] || labels[seed] >= 0) continue;
    labels[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const Index3 c = spec.coords(cur);
      for (int a = 0; a < spec.dim; ++a) {
        for (int sgn : {-1, 1}) {
          Index3 d = c;
          d[a] += sgn;
          if (!spec.in_bounds(d)) continue;
          const std::size_t nb = spec.index(d);
          if (occ[nb] && labels[nb] < 0) {
            labels[nb] = next;
            stack.push_back(nb);
          }
        }
      }
    }
    ++next;
  }
  return next;
}

std::vector<GridSet> connected_components(const GridSet& set) {
  std::vector<int> labels;
  const int n = label_components(set, labels);
  std::vector<std::vector<std::uint8_t>> occ(n, std::vector<std::uint8_t>(labels.size(), 0));
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] >= 0) occ[labels[idx]][idx] = 1;
  }
  std::vector<GridSet> out;
  out.reserve(n);
  for (auto& o : occ) out.emplace_back(set.spec(), std::move(o));
  return out;
}

std::vector<Point> boundary_points(const GridSet& set) {
  const auto& spec = set.spec();
  const auto& occ = set.occupancy();
  std::vector<Point> out;
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    const Index3 c = spec.coords(idx);
    for (int a = 0; a < spec.dim; ++a) {
      if (c[a] + 1 >= spec.shape[a]) continue;
      Index3 d = c;
      d[a] += 1;
      if (occ[idx] != occ[spec.index(d)]) {
        Point p = spec.center(c);
        p[a] += 0.5 * spec.spacing;
        out.push_back(p);
      }
    }
  }
  return out;
}

double distance_to_ball_boundary(const BallUnion& balls, const Point& p) {
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& c : balls.centers) nearest = std::min(nearest, (p - c).norm());
  return std::abs(nearest - balls.radius);
}

double hausdorff_boundary_distance(const GridSet& set, const BallUnion& balls) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "Hausdorff distance of an empty set");
  if (balls.centers.empty()) throw Error(ErrorCode::EmptySet, "empty ball union");
  double worst = 0.0;
  for (const auto& p : boundary_points(set)) {
    worst = std::max(worst, distance_to_ball_boundary(balls, p));
  }
  return worst;
}

double hausdorff_symmetric(const GridSet& set, const BallUnion& balls) {
  double worst = hausdorff_boundary_distance(set, balls);
  const auto& spec = set.spec();
  const ScalarField sdf = signed_distance(set);
  const double step = 0.5 * spec.spacing;
  const double r = balls.radius;
  for (const auto& c : balls.centers) {
    if (spec.dim == 2) {
      const int m = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / step)));
      for (int k = 0; k < m; ++k) {
        const double th = 2.0 * std::numbers::pi * k / m;
        const Point y = c + r * Point(std::cos(th), std::sin(th), 0.0);
        worst = std::max(worst, std::abs(sdf.interpolate(y)));
      }
    } else {
      // Fibonacci sphere at roughly half-cell spacing.
      const int m = std::max(32, static_cast<int>(std::ceil(4.0 * std::numbers::pi * r * r /
                                                            (step * step))));
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < m; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / m;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * k;
        const Point y = c + r * Point(rho * std::cos(th), rho * std::sin(th), z);
        worst = std::max(worst, std::abs(sdf.interpolate(y)));
      }
    }
  }
  return worst;
}

}  // namespace flatflow
