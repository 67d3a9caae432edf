#include "flatflow/step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "flatflow/distance.hpp"
#include "flatflow/geometry.hpp"
#include "flatflow/maxflow.hpp"

namespace flatflow {

double default_target_volume(const GridSpec& spec) { return unit_ball_volume(spec.dim); }

double volume_penalty(double volume, double h, double target) {
  return std::abs(volume - target) / std::sqrt(h);
}

double dissipation_slack(double p_prev, double v_prev, double p_new, double d_new, double v_new,
                         double h, double target) {
  const double before = p_prev + volume_penalty(v_prev, h, target);
  const double after = p_new + d_new + volume_penalty(v_new, h, target);
  return before - after;
}

StepEnergy assemble_step(const GridSet& prev, double h) {
  return assemble_step(prev, h, default_target_volume(prev.spec()));
}

StepEnergy assemble_step(const GridSet& prev, double h, double target_volume) {
  if (prev.empty()) throw Error(ErrorCode::EmptySet, "previous set is empty");
  return assemble_step(prev, h, target_volume, signed_distance(prev));
}

StepEnergy assemble_step(const GridSet& prev, double h, double target_volume,
                         const ScalarField& prev_distance) {
  if (prev.empty()) throw Error(ErrorCode::EmptySet, "previous set is empty");
  StepEnergy e;
  e.spec = prev.spec();
  e.prev = prev;
  e.prev_perimeter = perimeter(prev);
  e.prev_volume = volume(prev);
  const double bound = std::pow(target_volume / e.prev_perimeter, 2);
  if (!(h > 0.0) || !(h < bound)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "admissibility bound h < (ω/P)² violated: h = " << h << ", (ω/P)² = " << bound;
    throw Error(ErrorCode::StepTooLarge, msg.str());
  }
  e.prev_distance = prev_distance;
  e.h = h;
  e.target_volume = target_volume;
  e.penalty_scale = 1.0 / std::sqrt(h);
  e.cut_weights = crofton_stencil(e.spec);
  e.linear_term = prev_distance.values * (e.spec.cell_volume() / h);
  return e;
}

EnergyTerms energy_terms(const GridSet& candidate, const StepEnergy& e) {
  EnergyTerms t;
  t.perimeter = candidate.empty() ? 0.0 : perimeter(candidate);
  const auto& occ = candidate.occupancy();
  for (std::size_t idx = 0; idx < occ.size(); ++idx) {
    if (occ[idx]) t.linear += e.linear_term[static_cast<Eigen::Index>(idx)];
  }
  t.penalty = volume_penalty(volume(candidate), e.h, e.target_volume);
  t.total = t.perimeter + t.linear + t.penalty;
  return t;
}

double energy_of(const GridSet& candidate, const StepEnergy& e) {
  return energy_terms(candidate, e).total;
}

double energy_of(const GridSet& candidate, const GridSet& prev, double h) {
  StepEnergy e;
  e.spec = prev.spec();
  e.h = h;
  e.target_volume = default_target_volume(prev.spec());
  e.linear_term = signed_distance(prev).values * (e.spec.cell_volume() / h);
  return energy_of(candidate, e);
}

double dissipation_term(const GridSet& candidate, const StepEnergy& e) {
  const auto& a = candidate.occupancy();
  const auto& b = e.prev.occupancy();
  double sum = 0.0;
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    if (a[idx] != b[idx]) sum += std::abs(e.linear_term[static_cast<Eigen::Index>(idx)]);
  }
  return sum;
}

namespace {

using Labels = std::vector<std::uint8_t>;
using State = std::vector<std::int8_t>;  // +1 forced in, -1 forced out, 0 free

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cells within `width` of the previous interface are free; the rest keep
// their previous label.
struct Band {
  std::vector<std::size_t> cells;
  std::vector<double> a, w_in, w_out;
  struct Edge {
    int u, v;
    double w;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<std::pair<int, double>>> nbrs;
  std::size_t core = 0;
  Labels prev;

  Band(const StepEnergy& e, double width) {
    const auto& spec = e.spec;
    const auto& occ = e.prev.occupancy();
    std::vector<int> local(spec.size(), -1);
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
      const bool free = !spec.in_margin(spec.coords(idx)) && std::abs(e.prev_distance[idx]) <= width;
      if (free) {
        local[idx] = static_cast<int>(cells.size());
        cells.push_back(idx);
        prev.push_back(occ[idx]);
      } else if (occ[idx]) {
        ++core;
      }
    }
    const int n = static_cast<int>(cells.size());
    a.resize(n);
    w_in.assign(n, 0.0);
    w_out.assign(n, 0.0);
    nbrs.resize(n);
    for (int p = 0; p < n; ++p) {
      const std::size_t idx = cells[p];
      a[p] = e.linear_term[static_cast<Eigen::Index>(idx)];
      const Index3 c = spec.coords(idx);
      for (const auto& st : e.cut_weights) {
        for (int sgn : {1, -1}) {
          const Index3 d{c[0] + sgn * st.offset[0], c[1] + sgn * st.offset[1],
                         c[2] + sgn * st.offset[2]};
          if (!spec.in_bounds(d)) {
            w_out[p] += st.weight;
            continue;
          }
          const std::size_t q = spec.index(d);
          const int lq = local[q];
          if (lq >= 0) {
            if (sgn > 0) {
              edges.push_back({p, lq, st.weight});
              nbrs[p].push_back({lq, st.weight});
              nbrs[lq].push_back({p, st.weight});
            }
          } else if (occ[q]) {
            w_in[p] += st.weight;
          } else {
            w_out[p] += st.weight;
          }
        }
      }
    }
  }

  int size() const { return static_cast<int>(cells.size()); }
};

struct Probe {
  double mu;
  std::size_t count;
  Labels x;
};

class Solver {
 public:
  Solver(const Band& b, const StepEnergy& e)
      : b_(b), cv_(e.spec.cell_volume()), c_(e.penalty_scale), omega_(e.target_volume) {}

  double c() const { return c_; }
  double cv() const { return cv_; }
  double omega() const { return omega_; }
  int solves() const { return solves_; }
  double last_flow() const { return flow_; }

  Labels solve(double mu, const State& st) {
    const int n = b_.size();
    Labels x(n, 0);
    std::vector<int> idx(n, -1);
    int m = 0;
    for (int p = 0; p < n; ++p) {
      if (st[p] == 0) {
        idx[p] = m++;
      } else {
        x[p] = st[p] > 0;
      }
    }
    std::vector<double> u0(m), u1(m);
    for (int p = 0; p < n; ++p) {
      if (idx[p] < 0) continue;
      u1[idx[p]] = b_.a[p] - mu * cv_ + b_.w_out[p];
      u0[idx[p]] = b_.w_in[p];
    }
    graph_.reset(m);
    for (const auto& ed : b_.edges) {
      const int iu = idx[ed.u], iv = idx[ed.v];
      if (iu >= 0 && iv >= 0) {
        graph_.add_edge(iu, iv, ed.w, ed.w);
      } else if (iu >= 0) {
        (x[ed.v] ? u0[iu] : u1[iu]) += ed.w;
      } else if (iv >= 0) {
        (x[ed.u] ? u0[iv] : u1[iv]) += ed.w;
      }
    }
    for (int i = 0; i < m; ++i) {
      const double d = u1[i] - u0[i];
      if (d > 0) {
        graph_.add_terminal(i, 0.0, d);
      } else {
        graph_.add_terminal(i, -d, 0.0);
      }
    }
    flow_ = graph_.solve();
    ++solves_;
    for (int p = 0; p < n; ++p) {
      if (idx[p] >= 0) x[p] = graph_.in_source_set(idx[p]);
    }
    return x;
  }

  // Band part of the perimeter and linear terms.
  double g(const Labels& x) const {
    double sum = 0.0;
    for (const auto& ed : b_.edges) {
      if (x[ed.u] != x[ed.v]) sum += ed.w;
    }
    for (int p = 0; p < b_.size(); ++p) sum += x[p] ? b_.a[p] + b_.w_out[p] : b_.w_in[p];
    return sum;
  }

  static std::size_t count(const Labels& x) {
    return static_cast<std::size_t>(std::count(x.begin(), x.end(), std::uint8_t{1}));
  }

  double vol(std::size_t n_in) const { return static_cast<double>(b_.core + n_in) * cv_; }

  double f(const Labels& x) const { return g(x) + c_ * std::abs(vol(count(x)) - omega_); }

 private:
  const Band& b_;
  double cv_, c_, omega_;
  MaxFlow graph_;
  int solves_ = 0;
  double flow_ = 0.0;
};

struct SearchResult {
  bool settled = false;
  double lb = -kInf;
  Labels best;
  double best_f = kInf;
  Labels x_lo, x_hi;
  double mu_lo = 0.0, mu_hi = 0.0;
};

void consider(SearchResult& r, const Labels& x, double fx) {
  if (fx < r.best_f) {
    r.best_f = fx;
    r.best = x;
  }
}

// Greedy repair over components of the jump set between two nested
// parametric solutions; components are independent in the energy.
void repair(const Band& b, Solver& sv, SearchResult& r) {
  const int n = b.size();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> comps;
  for (int p = 0; p < n; ++p) {
    if (!(r.x_hi[p] && !r.x_lo[p]) || comp[p] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::vector<int> stack{p};
    comp[p] = id;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      comps[id].push_back(q);
      for (auto [nb, w] : b.nbrs[q]) {
        (void)w;
        if (r.x_hi[nb] && !r.x_lo[nb] && comp[nb] < 0) {
          comp[nb] = id;
          stack.push_back(nb);
        }
      }
    }
  }
  if (comps.size() < 2) return;
  struct Item {
    double delta;
    std::size_t size;
    int id;
  };
  std::vector<Item> items;
  for (int id = 0; id < static_cast<int>(comps.size()); ++id) {
    double delta = 0.0;
    for (int p : comps[id]) {
      delta += b.a[p] + b.w_out[p] - b.w_in[p];
      for (auto [q, w] : b.nbrs[p]) {
        if (r.x_lo[q]) {
          delta -= w;
        } else if (comp[q] != id) {
          delta += w;
        }
      }
    }
    items.push_back({delta, comps[id].size(), id});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
    return x.delta / double(x.size) < y.delta / double(y.size);
  });
  const double g_lo = sv.g(r.x_lo);
  const std::size_t n_lo = Solver::count(r.x_lo);
  double acc = 0.0;
  std::size_t added = 0;
  double best = kInf;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < items.size(); ++k) {
    acc += items[k - 1].delta;
    added += items[k - 1].size;
    const double fk = g_lo + acc + sv.c() * std::abs(sv.vol(n_lo + added) - sv.omega());
    if (fk < best) {
      best = fk;
      best_k = k;
    }
  }
  if (best_k == 0) return;
  Labels x = r.x_lo;
  for (std::size_t k = 0; k < best_k; ++k) {
    for (int p : comps[items[k].id]) x[p] = 1;
  }
  consider(r, x, sv.f(x));
}

// Steepest single-cell descent on the band energy, starting from the best
// candidate. Parametric solutions only reach the lower convex hull of
// (volume, energy), so a set with volume closer to the target can still do
// better; this finds such sets when they differ by a few boundary cells.
void polish(const Band& b, const Solver& sv, SearchResult& r) {
  const int n = b.size();
  Labels x = r.best;
  std::size_t k = Solver::count(x);
  // Change of g when cell p flips.
  auto delta_g = [&](int p) {
    double d = b.a[p] + b.w_out[p] - b.w_in[p];
    for (auto [q, w] : b.nbrs[p]) d += x[q] ? -w : w;
    return x[p] ? -d : d;
  };
  std::vector<double> dg(n);
  std::set<std::pair<double, int>> add, remove;
  auto insert = [&](int p) {
    dg[p] = delta_g(p);
    (x[p] ? remove : add).insert({dg[p], p});
  };
  auto erase = [&](int p) { (x[p] ? remove : add).erase({dg[p], p}); };
  for (int p = 0; p < n; ++p) insert(p);
  auto penalty = [&](std::size_t m) { return sv.c() * std::abs(sv.vol(m) - sv.omega()); };
  double fx = r.best_f;
  for (int it = 0; it < n; ++it) {
    double best = 0.0;
    int pick = -1;
    if (!add.empty()) {
      const double d = add.begin()->first + penalty(k + 1) - penalty(k);
      if (d < best) {
        best = d;
        pick = add.begin()->second;
      }
    }
    if (!remove.empty() && k > 0) {
      const double d = remove.begin()->first + penalty(k - 1) - penalty(k);
      if (d < best) {
        best = d;
        pick = remove.begin()->second;
      }
    }
    if (pick < 0 || best >= -1e-12 * (1.0 + std::abs(fx))) break;
    erase(pick);
    for (auto [q, w] : b.nbrs[pick]) {
      (void)w;
      erase(q);
    }
    k = x[pick] ? k - 1 : k + 1;
    x[pick] = !x[pick];
    insert(pick);
    for (auto [q, w] : b.nbrs[pick]) {
      (void)w;
      insert(q);
    }
    fx += best;
  }
  if (x != r.best) consider(r, x, sv.f(x));
}

SearchResult parametric_search(const Band& b, Solver& sv, const State& st, int max_iter,
                               std::vector<Probe>* probes) {
  SearchResult r;
  const double c = sv.c(), omega = sv.omega();
  auto probe = [&](double mu, const State& s) {
    Labels x = sv.solve(mu, s);
    const std::size_t k = Solver::count(x);
    const double gx = sv.g(x);
    const double v = sv.vol(k);
    r.lb = std::max(r.lb, gx - mu * (v - omega));
    consider(r, x, gx + c * std::abs(v - omega));
    if (probes) probes->push_back({mu, k, x});
    return x;
  };

  r.mu_lo = -c;
  r.x_lo = probe(-c, st);
  if (sv.vol(Solver::count(r.x_lo)) >= omega) {
    r.settled = true;
    r.x_hi = r.x_lo;
    r.mu_hi = -c;
    return r;
  }
  r.mu_hi = c;
  r.x_hi = probe(c, st);
  if (sv.vol(Solver::count(r.x_hi)) <= omega) {
    r.settled = true;
    r.x_lo = r.x_hi;
    r.mu_lo = c;
    return r;
  }
  const int n = b.size();
  for (int it = 0; it < max_iter; ++it) {
    if (Solver::count(r.x_hi) - Solver::count(r.x_lo) <= 1) break;
    State s = st;
    for (int p = 0; p < n; ++p) {
      if (r.x_lo[p]) s[p] = 1;
      if (!r.x_hi[p]) s[p] = -1;
    }
    const double mid = 0.5 * (r.mu_lo + r.mu_hi);
    Labels x = probe(mid, s);
    if (sv.vol(Solver::count(x)) < omega) {
      r.mu_lo = mid;
      r.x_lo = std::move(x);
    } else {
      r.mu_hi = mid;
      r.x_hi = std::move(x);
    }
  }
  repair(b, sv, r);
  return r;
}

// Exact minimization by branch and bound with Lagrangian lower bounds. Every
// labelling whose band energy lies within `tol` of the optimum is kept in
// `pool`, so ties in exact arithmetic can be settled afterwards on the
// absolute energy.
struct ExactPool {
  double best = kInf;
  std::vector<std::pair<double, Labels>> items;

  double tol() const { return 1e-12 * (1.0 + std::abs(best)); }
  void add(const Labels& x, double fx) {
    if (fx > best + tol()) return;
    best = std::min(best, fx);
    for (const auto& it : items) {
      if (it.second == x) return;
    }
    items.emplace_back(fx, x);
  }
};

void exact_search(const Band& b, Solver& sv, const State& st, int max_iter, ExactPool& pool) {
  const SearchResult r = parametric_search(b, sv, st, max_iter, nullptr);
  pool.add(r.best, r.best_f);
  if (r.lb > pool.best + pool.tol()) return;
  // Branch on a cell where the bracketing solutions disagree, otherwise on
  // any free cell so that tied labellings are all reached.
  int pivot = -1;
  for (int p = 0; p < b.size() && pivot < 0; ++p) {
    if (st[p] == 0 && !r.settled && r.x_hi[p] && !r.x_lo[p]) pivot = p;
  }
  for (int p = 0; p < b.size() && pivot < 0; ++p) {
    if (st[p] == 0) pivot = p;
  }
  if (pivot < 0) return;
  State in = st, out = st;
  in[pivot] = 1;
  out[pivot] = -1;
  exact_search(b, sv, in, max_iter, pool);
  exact_search(b, sv, out, max_iter, pool);
}

// Smallest mu in [lo, hi] whose minimal minimizer has more than `k` cells
// (strict) or at least `k` cells (non-strict), located by bisection with
// contraction between the two known nested solutions.
double threshold(const Band& b, Solver& sv, std::vector<Probe>& probes, std::size_t k, bool strict,
                 int iters) {
  auto above = [&](std::size_t cnt) { return strict ? cnt > k : cnt >= k; };
  const Probe* lo = nullptr;
  const Probe* hi = nullptr;
  for (const auto& pr : probes) {
    if (above(pr.count)) {
      if (!hi || pr.mu < hi->mu) hi = &pr;
    } else {
      if (!lo || pr.mu > lo->mu) lo = &pr;
    }
  }
  if (!hi) return sv.c();
  if (!lo) return -sv.c();
  double mlo = lo->mu, mhi = hi->mu;
  Labels xlo = lo->x, xhi = hi->x;
  const int n = b.size();
  for (int it = 0; it < iters; ++it) {
    State s(n, 0);
    for (int p = 0; p < n; ++p) {
      if (xlo[p]) s[p] = 1;
      if (!xhi[p]) s[p] = -1;
    }
    const double mid = 0.5 * (mlo + mhi);
    Labels x = sv.solve(mid, s);
    if (above(Solver::count(x))) {
      mhi = mid;
      xhi = std::move(x);
    } else {
      mlo = mid;
      xlo = std::move(x);
    }
  }
  return 0.5 * (mlo + mhi);
}

GridSet to_set(const StepEnergy& e, const Band& b, const Labels& x) {
  std::vector<std::uint8_t> occ = e.prev.occupancy();
  for (int p = 0; p < b.size(); ++p) occ[b.cells[p]] = x[p];
  return GridSet(e.spec, std::move(occ));
}

}  // namespace

CutSolution minimize_step(const StepEnergy& e, const StepOptions& opt) {
  const auto& spec = e.spec;
  const double s = spec.spacing;
  const double max_dist = e.prev_distance.values.abs().maxCoeff();
  std::size_t interior = 1;
  for (int a = 0; a < spec.dim; ++a) interior *= static_cast<std::size_t>(spec.shape[a] - 2);
  double width = opt.band_width > 0.0 ? opt.band_width : std::max(4.0 * s, 1.5 * std::sqrt(e.h));
  if (interior <= static_cast<std::size_t>(opt.exact_limit)) width = kInf;

  CutSolution sol;
  for (;;) {
    const Band band(e, width);
    Solver sv(band, e);
    const int n = band.size();
    const State root(n, 0);
    std::vector<Probe> probes;
    SearchResult r = parametric_search(band, sv, root, opt.max_bisections, &probes);
    // The previous set is always feasible, so the minimizer never does worse.
    consider(r, band.prev, sv.f(band.prev));
    polish(band, sv, r);
    bool exact = r.settled;
    if (n <= opt.exact_limit) {
      ExactPool pool;
      pool.add(r.best, r.best_f);
      exact_search(band, sv, root, opt.max_bisections, pool);
      // Near-ties are decided by energy_of, the value every audit reports.
      double best_abs = kInf;
      for (const auto& [fx, x] : pool.items) {
        if (fx > pool.best + pool.tol()) continue;
        const double ea = energy_of(to_set(e, band, x), e);
        if (ea < best_abs) {
          best_abs = ea;
          r.best = x;
          r.best_f = fx;
        }
      }
      exact = true;
    }

    // Widen the band when the chosen set moves next to its edge.
    bool touches = false;
    if (width < max_dist) {
      for (int p = 0; p < n && !touches; ++p) {
        if (r.best[p] != band.prev[p] &&
            std::abs(e.prev_distance[band.cells[p]]) > width - 2.5 * s) {
          touches = true;
        }
      }
    }
    if (touches) {
      width *= 2.0;
      continue;
    }

    const double c = sv.c();
    const std::size_t k = Solver::count(r.best);
    const double v = sv.vol(k);
    double mu;
    if (r.settled) {
      mu = r.mu_lo;
    } else if (std::abs(v - e.target_volume) <= 0.5 * sv.cv()) {
      const double alpha = threshold(band, sv, probes, k, false, opt.multiplier_bisections);
      const double beta = threshold(band, sv, probes, k, true, opt.multiplier_bisections);
      mu = 0.5 * (alpha + beta);
    } else {
      mu = 0.5 * (r.mu_lo + r.mu_hi);
    }
    sol.search_multiplier = std::clamp(mu, -c, c);
    if (std::abs(v - e.target_volume) > 0.5 * sv.cv()) {
      sol.multiplier = v < e.target_volume ? c : -c;
    } else {
      sol.multiplier = sol.search_multiplier;
    }
    sol.stalled = r.best == band.prev;
    sol.set = to_set(e, band, r.best);
    sol.exact = exact;
    sol.cut_solves = sv.solves();
    sol.flow_value = sv.last_flow();
    sol.band_width = width;
    sol.free_cells = n;
    break;
  }

  if (sol.set.empty()) {
    throw Error(ErrorCode::EmptyMinimizer, "the step minimizer is empty; h is too large");
  }

  // Discrete dissipation guard: never accept a set that violates the
  // inequality in computed energies.
  const double slack = dissipation_slack(e.prev_perimeter, e.prev_volume, perimeter(sol.set),
                                         dissipation_term(sol.set, e), volume(sol.set), e.h,
                                         e.target_volume);
  if (slack < 0.0) {
    sol.set = e.prev;
    sol.guarded = true;
  }
  sol.energy = energy_of(sol.set, e);
  return sol;
}

}  // namespace flatflow
