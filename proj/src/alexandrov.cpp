#include "flatflow/alexandrov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "flatflow/distance.hpp"
#include "flatflow/io.hpp"

namespace flatflow {

namespace {

// Balances raster noise, about s / σ², against the smoothing bias, about
// σ² / R³, while never going below three cells. The R / 3 cap keeps the
// kernel away from the medial axis.
double default_smoothing(const GridSpec& spec, double smoothing, double R) {
  if (smoothing > 0.0) return smoothing;
  const double balanced = std::min(std::pow(spec.spacing * R * R * R, 0.25), R / 3.0);
  return std::max(3.0 * spec.spacing, balanced);
}

// Directions for width-based diameters: a half circle in 2D, a Fibonacci
// hemisphere in 3D.
std::vector<Point> directions(int dim, int m) {
  std::vector<Point> out;
  if (dim == 2) {
    for (int k = 0; k < m; ++k) {
      const double th = std::numbers::pi * k / m;
      out.emplace_back(std::cos(th), std::sin(th), 0.0);
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < m; ++k) {
      const double z = 1.0 - (k + 0.5) / m;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.emplace_back(rho * std::cos(golden * k), rho * std::sin(golden * k), z);
    }
  }
  return out;
}

double diameter(const std::vector<Point>& pts, int dim) {
  double best = 0.0;
  if (pts.size() <= 4000) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        best = std::max(best, (pts[i] - pts[j]).squaredNorm());
      }
    }
    return std::sqrt(best);
  }
  // Width over many directions underestimates the diameter by a factor
  // cos(angular gap / 2), below 1e-5 relative here.
  for (const auto& d : directions(dim, dim == 2 ? 720 : 20000)) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : pts) {
      const double t = p.dot(d);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

// Label of the occupied cell nearest to a point close to the interface.
int nearest_label(const GridSpec& spec, const std::vector<int>& labels, const Point& p) {
  const Eigen::Vector3d g = spec.to_grid(p);
  Index3 base{static_cast<int>(std::lround(g[0])), static_cast<int>(std::lround(g[1])),
              spec.dim == 3 ? static_cast<int>(std::lround(g[2])) : 0};
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const int zr = spec.dim == 3 ? 2 : 0;
  for (int dz = -zr; dz <= zr; ++dz) {
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const Index3 c{base[0] + dx, base[1] + dy, base[2] + dz};
        if (!spec.in_bounds(c)) continue;
        const int l = labels[spec.index(c)];
        if (l < 0) continue;
        const double d = (spec.center(c) - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = l;
        }
      }
    }
  }
  return best;
}

// Single-linkage clusters of the core cells at threshold g: cells closer
// than g share a cluster. Returns per-cell cluster ids (-1 outside the core).
int single_linkage(const GridSet& core, double g, std::vector<int>& cluster) {
  const GridSet grown = dilate(core, 0.5 * g, DilateMode::CellCentres);
  std::vector<int> labels;
  label_components(grown, labels);
  std::vector<int> remap(labels.size() + 1, -1);
  int n = 0;
  cluster.assign(labels.size(), -1);
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (!core.contains(idx)) continue;
    int& id = remap[static_cast<std::size_t>(labels[idx])];
    if (id < 0) id = n++;
    cluster[idx] = id;
  }
  return n;
}

// One Gauss-Newton step on Σ (|x - c| - R)² over the boundary points whose
// nearest centre is c.
std::vector<Point> polish(const std::vector<Point>& centers, double R,
                          const std::vector<Point>& pts, int dim) {
  std::vector<Eigen::Matrix3d> jtj(centers.size(), Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> jtr(centers.size(), Eigen::Vector3d::Zero());
  for (const auto& p : pts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < centers.size(); ++i) {
      if ((p - centers[i]).squaredNorm() < (p - centers[best]).squaredNorm()) best = i;
    }
    const Eigen::Vector3d d = p - centers[best];
    const double len = d.norm();
    if (len <= 0.0) continue;
    const Eigen::Vector3d j = -d / len;
    jtj[best] += j * j.transpose();
    jtr[best] += j * (len - R);
  }
  std::vector<Point> out = centers;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    Eigen::Matrix3d a = jtj[i];
    if (dim == 2) a(2, 2) = 1.0;
    if (std::abs(a.determinant()) < 1e-12) continue;
    Eigen::Vector3d step = -a.ldlt().solve(jtr[i]);
    if (dim == 2) step.z() = 0.0;
    out[i] += step;
  }
  return out;
}

}  // namespace

double estimate_lambda(const GridSet& set) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "cannot estimate lambda of an empty set");
  const int n = set.spec().n();
  return n * perimeter(set) / ((n + 1) * volume(set));
}

double curvature_deviation(const CurvatureSampling& sampling, double lambda, int n) {
  double sum = 0.0;
  for (const auto& s : sampling.samples) {
    sum += s.area_weight * std::pow(std::abs(s.curvature - lambda), n);
  }
  return std::pow(sum, 1.0 / n);
}

double curvature_deviation(const GridSet& set, double lambda, double smoothing) {
  const auto& spec = set.spec();
  const double s = default_smoothing(spec, smoothing, spec.n() / lambda);
  return curvature_deviation(mean_curvature_samples(set, s), lambda, spec.n());
}

double curvature_noise_floor(int dim, double spacing, double R, double smoothing) {
  const int m = 2 * static_cast<int>(std::ceil((R + 3.0 * smoothing) / spacing)) + 6;
  const auto spec = GridSpec::centered(dim, {m, m, dim == 3 ? m : 1}, spacing);
  std::vector<std::uint8_t> occ(spec.size(), 0);
  // A quarter-cell offset avoids the extra symmetry of a centred raster.
  const Point c(0.25 * spacing, 0.125 * spacing, dim == 3 ? 0.0625 * spacing : 0.0);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    occ[idx] = !spec.in_margin(spec.coords(idx)) && (spec.center(idx) - c).norm() < R;
  }
  const GridSet ball(spec, std::move(occ));
  if (ball.empty()) return 0.0;
  return curvature_deviation(mean_curvature_samples(ball, smoothing), spec.n() / R, spec.n());
}

MontielRosTable montiel_ros_residuals(const GridSet& set, double lambda,
                                      const std::vector<double>& r_list,
                                      const std::vector<double>& rho_list) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "Montiel-Ros residuals of an empty set");
  if (!(lambda > 0.0)) throw Error(ErrorCode::RadiusOutOfRange, "lambda must be positive");
  const auto& spec = set.spec();
  const int n = spec.n();
  MontielRosTable t;
  t.lambda = lambda;
  t.R = n / lambda;
  t.volume = volume(set);
  for (double r : r_list) {
    if (!(r > 0.0 && r < t.R)) {
      throw Error(ErrorCode::RadiusOutOfRange,
                  "r = " + format_double(r) + " outside (0, R = " + format_double(t.R) + ")");
    }
  }
  for (double rho : rho_list) {
    if (!(rho >= 0.0)) throw Error(ErrorCode::RadiusOutOfRange, "rho must be nonnegative");
  }
  const ScalarField sdf = signed_distance(set);
  const std::vector<BoundarySample> samples = interface_measure(set, sdf);
  double total_weight = 0.0;
  for (const auto& s : samples) total_weight += s.area_weight;
  const double scale = t.volume / std::pow(t.R, n + 1);
  for (double r : r_list) {
    const GridSet er = erode(set, r, sdf);
    const double ve = volume(er);
    // Boundary measure not reached by the opening dilate(erode(E, r), r).
    double gamma = 0.0;
    if (er.empty()) {
      gamma = total_weight;
    } else {
      const GridSet opened = dilate(er, r);
      if (opened.empty()) {
        gamma = total_weight;
      } else {
        const ScalarField od = signed_distance(opened);
        for (const auto& s : samples) {
          if (od.interpolate(s.position) > spec.spacing) gamma += s.area_weight;
        }
      }
    }
    for (double rho : rho_list) {
      if (!(rho < r)) continue;
      MontielRosRow row;
      row.r = r;
      row.rho = rho;
      row.measured_eroded = ve;
      row.predicted_eroded = scale * std::pow(t.R - r, n + 1);
      row.residual1 = row.measured_eroded - row.predicted_eroded;
      row.residual2_proxy = gamma;
      row.measured_sum = er.empty() ? 0.0 : (rho > 0.0 ? volume(dilate(er, rho)) : ve);
      row.predicted_sum = scale * std::pow(t.R - (r - rho), n + 1);
      row.residual3 = row.measured_sum - row.predicted_sum;
      t.rows.push_back(row);
    }
  }
  return t;
}

std::pair<BallUnion, AlexandrovReport> cluster_and_fit(const GridSet& set, double epsilon,
                                                       double lambda,
                                                       const AlexandrovOptions& opt) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "cannot fit balls to an empty set");
  if (!(lambda > 0.0)) throw Error(ErrorCode::RangeError, "lambda must be positive");
  const auto& spec = set.spec();
  const int n = spec.n();
  AlexandrovReport rep;
  rep.dim = spec.dim;
  rep.n = n;
  rep.lambda_hat = lambda;
  rep.epsilon = epsilon;
  rep.R = n / lambda;
  rep.q = 1.0 / std::pow(n + 2, 3);
  rep.delta = opt.delta;
  rep.smoothing = default_smoothing(spec, opt.smoothing, rep.R);
  rep.perimeter = perimeter(set);
  rep.volume = volume(set);
  // ε accumulates over the whole boundary, so the single-ball floor is scaled
  // by the boundary measure in units of one ball.
  const double ball_perimeter = (n + 1) * unit_ball_volume(n + 1) * std::pow(rep.R, n);
  rep.noise_floor = curvature_noise_floor(spec.dim, spec.spacing, rep.R, rep.smoothing) *
                    std::pow(rep.perimeter / ball_perimeter, 1.0 / n);

  // Core radius, with ε floored at the grid's curvature noise.
  rep.epsilon_floored = epsilon < 2.0 * rep.noise_floor;
  const double eps_used = rep.epsilon_floored ? rep.noise_floor : epsilon;
  rep.r0 = std::max(0.0, rep.R - std::pow(eps_used, 1.0 / (n + 2)));
  const ScalarField sdf = signed_distance(set);
  const GridSet core = erode(set, rep.r0, sdf);
  rep.core_cells = core.count();
  if (core.empty()) {
    throw Error(ErrorCode::EmptyCore, "erode(E, r0) is empty for r0 = " + format_double(rep.r0));
  }

  rep.gap_threshold = std::max(4.0 * spec.spacing, 2.0 * std::pow(epsilon, 1.0 / (2.0 * (n + 2))));
  std::vector<int> cluster;
  rep.N = single_linkage(core, rep.gap_threshold, cluster);
  std::vector<int> coarse;
  rep.threshold_stable = single_linkage(core, 2.0 * rep.gap_threshold, coarse) == rep.N;

  std::vector<Point> centers(rep.N, Point::Zero());
  std::vector<std::size_t> counts(rep.N, 0);
  for (std::size_t idx = 0; idx < cluster.size(); ++idx) {
    if (cluster[idx] < 0) continue;
    centers[cluster[idx]] += spec.center(idx);
    ++counts[cluster[idx]];
  }
  for (int i = 0; i < rep.N; ++i) centers[i] /= static_cast<double>(counts[i]);

  const std::vector<Point> pts = boundary_points(set);
  auto one_sided = [&](const std::vector<Point>& cs) {
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, distance_to_ball_boundary({cs, rep.R, 0.0}, p));
    return worst;
  };
  double h_best = one_sided(centers);
  const std::vector<Point> polished = polish(centers, rep.R, pts, spec.dim);
  const double h_pol = one_sided(polished);
  if (h_pol < h_best) {
    centers = polished;
    h_best = h_pol;
  }
  rep.balls = BallUnion{centers, rep.R, 0.0};
  rep.hausdorff_one_sided = h_best;
  rep.hausdorff_symmetric = hausdorff_symmetric(set, rep.balls);
  rep.perimeter_residual =
      std::abs(rep.perimeter - rep.N * (n + 1) * unit_ball_volume(n + 1) * std::pow(rep.R, n));

  rep.rho_minus = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) rep.rho_minus = std::min(rep.rho_minus, -sdf.interpolate(c));
  rep.rho_plus = 0.0;
  for (const auto& p : pts) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) nearest = std::min(nearest, (p - c).norm());
    rep.rho_plus = std::max(rep.rho_plus, nearest);
  }
  rep.inclusion_deficit = rep.R - rep.rho_minus;
  rep.inclusion_excess = rep.rho_plus - rep.R;
  rep.outside_hypothesis = epsilon > opt.delta;
  rep.status = rep.outside_hypothesis ? "outside theorem hypothesis" : "ok";
  return {rep.balls, rep};
}

std::vector<DensityRow> density_profile(const GridSet& set, double lambda,
                                        const std::vector<double>& radii, double delta) {
  const auto& spec = set.spec();
  const int n = spec.n();
  std::vector<std::pair<Point, double>> pts;
  for (const auto& s : interface_measure(set, signed_distance(set))) {
    pts.emplace_back(s.position, s.area_weight);
  }
  std::vector<DensityRow> rows;
  const double flat = unit_ball_volume(n);
  for (double r : radii) {
    if (!(r > 0.0) || (lambda > 0.0 && r > delta / lambda)) continue;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
    auto key = [&](long i, long j, long k) { return (i * 1000003L + j) * 1000033L + k; };
    auto cell_of = [&](const Point& p) {
      return std::array<long, 3>{static_cast<long>(std::floor(p.x() / r)),
                                 static_cast<long>(std::floor(p.y() / r)),
                                 static_cast<long>(std::floor(p.z() / r))};
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = cell_of(pts[i].first);
      buckets[key(c[0], c[1], c[2])].push_back(i);
    }
    DensityRow row;
    row.r = r;
    row.min_ratio = std::numeric_limits<double>::infinity();
    const double r2 = r * r;
    for (const auto& [x, wx] : pts) {
      (void)wx;
      const auto c = cell_of(x);
      double mass = 0.0;
      for (long dz = -1; dz <= 1; ++dz) {
        for (long dy = -1; dy <= 1; ++dy) {
          for (long dx = -1; dx <= 1; ++dx) {
            const auto it = buckets.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
            if (it == buckets.end()) continue;
            for (std::size_t j : it->second) {
              if ((pts[j].first - x).squaredNorm() < r2) mass += pts[j].second;
            }
          }
        }
      }
      const double ratio = mass / std::pow(r, n);
      if (ratio < row.min_ratio) {
        row.min_ratio = ratio;
        row.argmin = x;
      }
    }
    if (pts.empty()) row.min_ratio = 0.0;
    row.flagged = row.min_ratio < 0.5 * flat;
    rows.push_back(row);
  }
  return rows;
}

std::vector<DiameterRow> component_diameter_check(const GridSet& set, double smoothing) {
  const auto& spec = set.spec();
  const int n = spec.n();
  std::vector<DiameterRow> rows;
  if (set.empty()) return rows;
  std::vector<int> labels;
  const int count = label_components(set, labels);
  const double R = n / estimate_lambda(set);
  const CurvatureSampling cs = mean_curvature_samples(set, default_smoothing(spec, smoothing, R));
  std::vector<double> integral(count, 0.0);
  for (const auto& s : cs.samples) {
    const int l = nearest_label(spec, labels, s.position);
    if (l >= 0) integral[l] += s.area_weight * std::pow(std::abs(s.curvature), n - 1);
  }
  const auto comps = connected_components(set);
  for (int l = 0; l < count; ++l) {
    DiameterRow row;
    row.component = l;
    row.diameter = diameter(boundary_points(comps[l]), spec.dim);
    row.curvature_integral = integral[l];
    row.ratio = integral[l] > 0.0 ? row.diameter / integral[l] : 0.0;
    rows.push_back(row);
  }
  return rows;
}

Diagnosis diagnose(const GridSet& set, std::optional<double> lambda, const AlexandrovOptions& opt) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "cannot diagnose an empty set");
  const auto& spec = set.spec();
  const int n = spec.n();
  const double lam = lambda.value_or(estimate_lambda(set));
  if (!(lam > 0.0)) throw Error(ErrorCode::RangeError, "lambda must be positive");
  const double smoothing = default_smoothing(spec, opt.smoothing, n / lam);
  const CurvatureSampling cs = mean_curvature_samples(set, smoothing);
  const double eps = curvature_deviation(cs, lam, n);
  Diagnosis d;
  AlexandrovOptions o = opt;
  o.smoothing = smoothing;
  d.report = cluster_and_fit(set, eps, lam, o).second;
  d.report.dropped_fraction = cs.dropped_fraction();
  d.report.dropped_alarm = cs.alarm();
  std::vector<double> rs, rhos;
  for (double f : opt.r_fractions) rs.push_back(f * d.report.R);
  for (double r : rs) {
    for (double f : opt.rho_fractions) rhos.push_back(f * r);
  }
  std::sort(rhos.begin(), rhos.end());
  rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());
  d.table = montiel_ros_residuals(set, lam, rs, rhos);
  // Keep only the configured (r, ρ = f r) pairs.
  std::vector<MontielRosRow> kept;
  for (const auto& row : d.table.rows) {
    for (double f : opt.rho_fractions) {
      if (row.rho == f * row.r) {
        kept.push_back(row);
        break;
      }
    }
  }
  d.table.rows = std::move(kept);
  std::vector<double> radii;
  for (double f : opt.density_fractions) radii.push_back(f * opt.delta / lam);
  d.density = density_profile(set, lam, radii, opt.delta);
  d.diameters = component_diameter_check(set, smoothing);
  return d;
}

std::string montiel_ros_csv(const MontielRosTable& table) {
  std::ostringstream out;
  out << "r,rho,measured_eroded,predicted_eroded,residual1,residual2_proxy,measured_sum,"
         "predicted_sum,residual3\n";
  for (const auto& r : table.rows) {
    out << format_double(r.r) << ',' << format_double(r.rho) << ','
        << format_double(r.measured_eroded) << ',' << format_double(r.predicted_eroded) << ','
        << format_double(r.residual1) << ',' << format_double(r.residual2_proxy) << ','
        << format_double(r.measured_sum) << ',' << format_double(r.predicted_sum) << ','
        << format_double(r.residual3) << '\n';
  }
  return out.str();
}

}  // namespace flatflow
