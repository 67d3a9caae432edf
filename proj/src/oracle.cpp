#include "flatflow/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "flatflow/distance.hpp"
#include "flatflow/geometry.hpp"

namespace flatflow {

double BallSystem::lambda() const {
  double num = 0.0, den = 0.0;
  for (double r : radii) {
    if (r <= 0.0) continue;
    num += std::pow(r, n - 1);
    den += std::pow(r, n);
  }
  return den > 0.0 ? n * num / den : 0.0;
}

double BallSystem::volume_sum() const {
  double v = 0.0;
  for (double r : radii) {
    if (r > 0.0) v += std::pow(r, n + 1);
  }
  return v;
}

namespace {

std::vector<double> velocity(const BallSystem& sys) {
  const double lam = sys.lambda();
  std::vector<double> v(sys.radii.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (sys.radii[i] > 0.0) v[i] = lam - sys.n / sys.radii[i];
  }
  return v;
}

BallSystem rk4(const BallSystem& s, double h) {
  auto shifted = [&](const std::vector<double>& k, double f) {
    BallSystem t = s;
    for (std::size_t i = 0; i < t.radii.size(); ++i) {
      if (s.radii[i] > 0.0) t.radii[i] = s.radii[i] + f * k[i];
    }
    return t;
  };
  const auto k1 = velocity(s);
  const auto k2 = velocity(shifted(k1, 0.5 * h));
  const auto k3 = velocity(shifted(k2, 0.5 * h));
  const auto k4 = velocity(shifted(k3, h));
  BallSystem out = s;
  for (std::size_t i = 0; i < s.radii.size(); ++i) {
    if (s.radii[i] > 0.0) {
      out.radii[i] = s.radii[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  return out;
}

}  // namespace

BallTrajectory ball_ode_integrate(const std::vector<double>& radii0, int n, double horizon,
                                  double dt, double extinction) {
  if (radii0.empty() || n < 1 || !(dt > 0.0) || !(horizon >= 0.0)) {
    throw Error(ErrorCode::BadParams, "ball ODE needs radii, n >= 1, dt > 0, horizon >= 0");
  }
  for (double r : radii0) {
    if (!(r > 0.0)) throw Error(ErrorCode::BadParams, "initial radii must be positive");
  }
  BallTrajectory traj;
  traj.n = n;
  BallSystem sys{n, radii0};
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.radii.push_back(sys.radii);
    traj.lambda.push_back(sys.lambda());
  };
  record(0.0);
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  double t = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double t_next = std::min(horizon, static_cast<double>(k) * dt);
    while (t < t_next) {
      double rmin = std::numeric_limits<double>::infinity();
      int active = 0;
      for (double r : sys.radii) {
        if (r > 0.0) {
          rmin = std::min(rmin, r);
          ++active;
        }
      }
      if (active <= 1) {
        t = t_next;
        break;
      }
      // Resolve the stiff tail near extinction: |r'| grows like n / r.
      const double h = std::min(t_next - t, std::max(1e-12, 0.05 * rmin * rmin / n));
      BallSystem trial = rk4(sys, h);
      bool removed = false;
      for (std::size_t i = 0; i < trial.radii.size(); ++i) {
        if (sys.radii[i] > 0.0 && !(trial.radii[i] >= extinction)) {
          traj.events.push_back({t + h, static_cast<int>(i), std::pow(sys.radii[i], n + 1)});
          sys.radii[i] = 0.0;
          removed = true;
        }
      }
      if (removed) continue;
      sys = trial;
      t += h;
    }
    t = t_next;
    record(t);
  }
  return traj;
}

std::vector<double> trajectory_radii_at(const BallTrajectory& traj, double t) {
  if (traj.times.empty()) return {};
  if (t <= traj.times.front()) return traj.radii.front();
  if (t >= traj.times.back()) return traj.radii.back();
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - traj.times.begin());
  const double t0 = traj.times[j - 1], t1 = traj.times[j];
  const double f = (t - t0) / (t1 - t0);
  std::vector<double> r(traj.radii[j].size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = traj.radii[j - 1][i], b = traj.radii[j][i];
    r[i] = (a > 0.0 && b > 0.0) ? a + f * (b - a) : (f < 1.0 ? a : b);
  }
  return r;
}

GridSet exhaustive_step_minimizer(const GridSet& prev, double h) {
  return exhaustive_step_minimizer(assemble_step(prev, h));
}

GridSet exhaustive_step_minimizer(const StepEnergy& e) {
  const auto& spec = e.spec;
  std::vector<std::size_t> free;
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    if (!spec.in_margin(spec.coords(idx))) free.push_back(idx);
  }
  if (free.size() > 16) throw Error(ErrorCode::TooLarge, "exhaustive search limited to 16 cells");
  const int m = static_cast<int>(free.size());
  const std::size_t total = std::size_t{1} << m;
  const double cv = spec.cell_volume();
  const double pen = 1.0 / std::sqrt(e.h);

  // Gray-code sweep with incremental perimeter and linear terms.
  std::vector<std::uint8_t> occ(spec.size(), 0);
  std::vector<double> approx(total);
  double per = 0.0, lin = 0.0;
  int count = 0;
  approx[0] = pen * std::abs(0.0 - e.target_volume);
  for (std::size_t i = 1; i < total; ++i) {
    const int bit = std::countr_zero(i);
    const std::size_t idx = free[bit];
    const Index3 c = spec.coords(idx);
    for (const auto& st : e.cut_weights) {
      for (int sgn : {1, -1}) {
        const Index3 d{c[0] + sgn * st.offset[0], c[1] + sgn * st.offset[1],
                       c[2] + sgn * st.offset[2]};
        const bool other = spec.in_bounds(d) && occ[spec.index(d)];
        per += (bool(occ[idx]) != other) ? -st.weight : st.weight;
      }
    }
    occ[idx] ^= 1;
    const double a = e.linear_term[static_cast<Eigen::Index>(idx)];
    lin += occ[idx] ? a : -a;
    count += occ[idx] ? 1 : -1;
    const std::size_t gray = i ^ (i >> 1);
    approx[gray] = per + lin + pen * std::abs(count * cv - e.target_volume);
  }

  // Rescore every near-minimal labeling with the reference energy.
  const double lo = *std::min_element(approx.begin(), approx.end());
  const double tol = 1e-9 * (1.0 + std::abs(lo));
  GridSet best;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < total; ++mask) {
    if (approx[mask] > lo + tol) continue;
    std::vector<std::uint8_t> o(spec.size(), 0);
    for (int b = 0; b < m; ++b) o[free[b]] = (mask >> b) & 1;
    GridSet cand(spec, std::move(o));
    const double f = energy_of(cand, e);
    if (f < best_f) {
      best_f = f;
      best = std::move(cand);
    }
  }
  return best;
}

namespace {

double ball_phi(const Point& p, const Point& c, double r) { return (p - c).norm() - r; }

// Straight bar (rectangle in 2D, cylinder in 3D) of width w joining a and b.
double neck_phi(const Point& p, const Point& a, const Point& b, double width) {
  const Point ab = b - a;
  const double len = ab.norm();
  const Point u = ab / len;
  const double t = (p - a).dot(u);
  const double along = std::abs(t - 0.5 * len) - 0.5 * len;
  const double perp = (p - a - t * u).norm() - 0.5 * width;
  return std::max(along, perp);
}

}  // namespace

GridSet make_shape(const std::string& kind, const ShapeParams& params, const GridSpec& spec) {
  const int dim = spec.dim;
  auto center = [&](std::size_t i) {
    Point c = i < params.centers.size() ? params.centers[i] : Point::Zero();
    if (dim == 2) c.z() = 0.0;
    return c;
  };
  auto radius = [&](std::size_t i) {
    if (i < params.radii.size()) return params.radii[i];
    if (!params.radii.empty()) return params.radii.back();
    throw Error(ErrorCode::BadParams, kind + " needs radii");
  };
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::BadParams, kind + ": " + what + " must be positive");
    }
  };
  auto disjoint = [&](std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = i + 1; j < count; ++j) {
        if ((center(i) - center(j)).norm() <= radius(i) + radius(j)) {
          throw Error(ErrorCode::BadParams, kind + ": balls overlap or touch");
        }
      }
    }
  };

  std::function<double(const Point&)> phi;
  if (kind == "ball") {
    const double r = radius(0);
    positive(r, "radius");
    const Point c = center(0);
    phi = [=](const Point& p) { return ball_phi(p, c, r); };
  } else if (kind == "ball_union") {
    const std::size_t count = std::max(params.centers.size(), std::size_t{1});
    for (std::size_t i = 0; i < count; ++i) positive(radius(i), "radius");
    disjoint(count);
    std::vector<Point> cs;
    std::vector<double> rs;
    for (std::size_t i = 0; i < count; ++i) {
      cs.push_back(center(i));
      rs.push_back(radius(i));
    }
    phi = [=](const Point& p) {
      double v = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cs.size(); ++i) v = std::min(v, ball_phi(p, cs[i], rs[i]));
      return v;
    };
  } else if (kind == "cube") {
    positive(params.side, "side");
    const Point c = center(0);
    const double half = 0.5 * params.side;
    phi = [=](const Point& p) {
      const Point d = (p - c).cwiseAbs();
      double v = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < dim; ++a) v = std::max(v, d[a] - half);
      return v;
    };
  } else if (kind == "dumbbell") {
    if (params.centers.size() != 2) throw Error(ErrorCode::BadParams, "dumbbell needs 2 centers");
    positive(radius(0), "radius");
    positive(radius(1), "radius");
    positive(params.neck_width, "neck width");
    disjoint(2);
    const Point a = center(0), b = center(1);
    const double ra = radius(0), rb = radius(1), w = params.neck_width;
    if (w >= 2.0 * std::min(ra, rb)) {
      throw Error(ErrorCode::BadParams, "dumbbell neck must be narrower than the balls");
    }
    phi = [=](const Point& p) {
      return std::min({ball_phi(p, a, ra), ball_phi(p, b, rb), neck_phi(p, a, b, w)});
    };
  } else if (kind == "noisy_ball") {
    const double r = radius(0);
    positive(r, "radius");
    if (params.noise_amplitude < 0.0 || params.noise_amplitude >= 0.5 || params.noise_modes < 1) {
      throw Error(ErrorCode::BadParams, "noisy_ball needs 0 <= amplitude < 0.5 and modes >= 1");
    }
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    struct Mode {
      double amp, phase;
      Point dir;
      int k;
    };
    std::vector<Mode> modes;
    for (int k = 0; k < params.noise_modes; ++k) {
      Point d(gauss(rng), gauss(rng), dim == 3 ? gauss(rng) : 0.0);
      d.normalize();
      const double amp = uni(rng) / params.noise_modes;
      modes.push_back({amp, ang(rng), d, k + 2});
    }
    const Point c = center(0);
    const double amp = params.noise_amplitude;
    phi = [=](const Point& p) {
      const Point q = p - c;
      const double rho = q.norm();
      double g = 0.0;
      if (rho > 0.0) {
        if (dim == 2) {
          const double th = std::atan2(q.y(), q.x());
          for (const auto& md : modes) g += md.amp * std::cos(md.k * th + md.phase);
        } else {
          const Point u = q / rho;
          for (const auto& md : modes) g += md.amp * std::cos(md.k * u.dot(md.dir) + md.phase);
        }
      }
      return rho - r * (1.0 + amp * g);
    };
  } else {
    throw Error(ErrorCode::BadParams, "unknown shape kind '" + kind + "'");
  }

  std::vector<double> values(spec.size());
  std::vector<std::uint8_t> occ(spec.size(), 0);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    values[idx] = phi(spec.center(idx));
    if (spec.in_margin(spec.coords(idx))) {
      if (values[idx] < 0.0) throw Error(ErrorCode::BadParams, kind + " does not fit in the grid");
      continue;
    }
    occ[idx] = values[idx] < 0.0;
  }
  if (params.target_volume) {
    const double cv = spec.cell_volume();
    const auto k = static_cast<std::size_t>(std::llround(*params.target_volume / cv));
    std::vector<std::size_t> order;
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
      if (!spec.in_margin(spec.coords(idx))) order.push_back(idx);
    }
    if (k > order.size()) throw Error(ErrorCode::BadParams, "target volume exceeds the grid");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    std::fill(occ.begin(), occ.end(), 0);
    for (std::size_t i = 0; i < k; ++i) occ[order[i]] = 1;
  }
  GridSet out(spec, std::move(occ));
  if (out.empty()) throw Error(ErrorCode::BadParams, kind + " covers no cell centre");
  return out;
}

}  // namespace flatflow
