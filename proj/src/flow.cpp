#include "flatflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "flatflow/distance.hpp"
#include "flatflow/geometry.hpp"
#include "flatflow/io.hpp"

namespace flatflow {

RleSet::RleSet(const GridSet& set) {
  const auto& occ = set.occupancy();
  std::uint8_t state = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if ((occ[i] != 0) != (state != 0)) {
      toggles_.push_back(static_cast<std::uint32_t>(i));
      state ^= 1;
    }
  }
  if (state) toggles_.push_back(static_cast<std::uint32_t>(occ.size()));
}

GridSet RleSet::decode(const GridSpec& spec) const {
  std::vector<std::uint8_t> occ(spec.size(), 0);
  for (std::size_t r = 0; r + 1 < toggles_.size(); r += 2) {
    std::fill(occ.begin() + toggles_[r], occ.begin() + toggles_[r + 1], std::uint8_t{1});
  }
  return GridSet(spec, std::move(occ));
}

std::size_t RleSet::count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r + 1 < toggles_.size(); r += 2) n += toggles_[r + 1] - toggles_[r];
  return n;
}

std::size_t symmetric_difference_count(const RleSet& a, const RleSet& b) {
  const auto& ta = a.toggles();
  const auto& tb = b.toggles();
  std::size_t i = 0, j = 0, diff = 0;
  std::uint32_t last = 0;
  bool sa = false, sb = false;
  while (i < ta.size() || j < tb.size()) {
    const std::uint32_t next = std::min(i < ta.size() ? ta[i] : UINT32_MAX,
                                        j < tb.size() ? tb[j] : UINT32_MAX);
    if (sa != sb) diff += next - last;
    last = next;
    if (i < ta.size() && ta[i] == next) {
      sa = !sa;
      ++i;
    }
    if (j < tb.size() && tb[j] == next) {
      sb = !sb;
      ++j;
    }
  }
  return diff;
}

const char* to_string(ComponentEventKind kind) {
  switch (kind) {
    case ComponentEventKind::Extinction:
      return "extinction";
    case ComponentEventKind::Split:
      return "split";
    case ComponentEventKind::Merge:
      return "merge";
  }
  return "unknown";
}

int step_count(double h, double horizon) {
  return static_cast<int>(std::ceil(horizon / h * (1.0 - 1e-12)));
}

namespace {

struct Labeled {
  std::vector<int> labels;
  std::vector<ComponentInfo> info;
};

Labeled describe_components(const GridSet& set, const ScalarField& sdf) {
  Labeled out;
  const int n = label_components(set, out.labels);
  out.info.assign(n, ComponentInfo{});
  const auto& spec = set.spec();
  std::vector<std::size_t> cells(n, 0);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    const int l = out.labels[idx];
    if (l < 0) continue;
    auto& c = out.info[l];
    ++cells[l];
    c.centroid += spec.center(idx);
    c.inscribed_radius = std::max(c.inscribed_radius, -sdf[idx]);
  }
  for (int l = 0; l < n; ++l) {
    out.info[l].volume = static_cast<double>(cells[l]) * spec.cell_volume();
    out.info[l].centroid /= static_cast<double>(cells[l]);
  }
  return out;
}

// Links components of consecutive sets by overlap and logs topology events.
void link_components(const Labeled& prev, Labeled& next, int k, double t,
                     std::vector<ComponentEvent>& events) {
  std::map<std::pair<int, int>, std::size_t> overlap;
  for (std::size_t idx = 0; idx < next.labels.size(); ++idx) {
    const int a = prev.labels[idx], b = next.labels[idx];
    if (a >= 0 && b >= 0) ++overlap[{b, a}];
  }
  const int np = static_cast<int>(prev.info.size());
  const int nn = static_cast<int>(next.info.size());
  std::vector<std::size_t> best(nn, 0);
  std::vector<int> children(np, 0), parents(nn, 0);
  for (const auto& [key, cnt] : overlap) {
    const auto [b, a] = key;
    ++children[a];
    ++parents[b];
    if (cnt > best[b]) {
      best[b] = cnt;
      next.info[b].parent = a;
    }
  }
  for (int a = 0; a < np; ++a) {
    if (children[a] == 0) {
      events.push_back({ComponentEventKind::Extinction, k, t, a, prev.info[a].volume});
    } else if (children[a] > 1) {
      events.push_back({ComponentEventKind::Split, k, t, a, 0.0});
    }
  }
  for (int b = 0; b < nn; ++b) {
    if (parents[b] > 1) events.push_back({ComponentEventKind::Merge, k, t, b, 0.0});
  }
}

}  // namespace

FlowTrace run_flow(const GridSet& initial, double h, double horizon, const FlowConfig& config) {
  if (initial.empty()) throw Error(ErrorCode::EmptySet, "initial set is empty");
  if (!(h > 0.0)) throw Error(ErrorCode::StepTooLarge, "time step must be positive");
  if (!(horizon >= h)) {
    throw Error(ErrorCode::HorizonTooShort, "horizon " + format_double(horizon) +
                                                " is shorter than h = " + format_double(h));
  }
  if (config.snapshot_stride < 1) throw Error(ErrorCode::BadParams, "snapshot stride must be >= 1");
  const GridSpec& spec = initial.spec();
  FlowTrace trace;
  trace.h = h;
  trace.horizon = horizon;
  trace.target_volume = config.target_volume.value_or(default_target_volume(spec));
  trace.spec = spec;
  trace.initial_set = initial;
  const int steps = step_count(h, horizon);

  GridSet current = initial;
  ScalarField sdf = signed_distance(current);
  // Fails early with StepTooLarge before anything is recorded.
  StepEnergy energy = assemble_step(current, h, trace.target_volume, sdf);

  Labeled comps = describe_components(current, sdf);
  StepRecord r0;
  r0.volume = volume(current);
  r0.perimeter = energy.prev_perimeter;
  r0.components = comps.info;
  r0.set = RleSet(current);
  trace.records.push_back(std::move(r0));

  // A step that keeps its input is a fixed point: the next step sees the same
  // energy and returns the same solution, so it is reused instead of re-solved.
  CutSolution sol;
  bool fixed_point = false;
  for (int k = 1; k <= steps; ++k) {
    if (!fixed_point) {
      if (k > 1) energy = assemble_step(current, h, trace.target_volume, sdf);
      sol = minimize_step(energy, config.step);
      fixed_point = sol.set == current;
    }
    StepRecord rec;
    rec.k = k;
    rec.t = k * h;
    rec.volume = volume(sol.set);
    rec.perimeter = perimeter(sol.set);
    rec.lambda = sol.multiplier;
    rec.search_multiplier = sol.search_multiplier;
    rec.dissipation_term = dissipation_term(sol.set, energy);
    rec.sym_diff_volume =
        static_cast<double>(symmetric_difference_count(sol.set, current)) * spec.cell_volume();
    rec.guarded = sol.guarded;
    rec.stalled = sol.stalled;

    if (fixed_point) {
      for (std::size_t c = 0; c < comps.info.size(); ++c) comps.info[c].parent = static_cast<int>(c);
    } else {
      current = sol.set;
      sdf = signed_distance(current);
      Labeled next = describe_components(current, sdf);
      link_components(comps, next, k, rec.t, trace.events);
      comps = std::move(next);
    }
    rec.components = comps.info;
    if (k % config.snapshot_stride == 0 || k == steps) rec.set = RleSet(current);
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

DissipationReport verify_dissipation(const FlowTrace& trace) {
  DissipationReport rep;
  const auto& recs = trace.records;
  if (recs.empty()) {
    rep.violations.push_back({0, "empty trace", 0.0});
    return rep;
  }
  const double h = trace.h;
  const double w = trace.target_volume;
  const double c = 1.0 / std::sqrt(h);
  const double half_cell = 0.5 * trace.spec.cell_volume();
  const double p0 = recs[0].perimeter;
  const double v0 = recs[0].volume;
  const double top = p0 + volume_penalty(v0, h, w);
  const double trap = std::sqrt(h) * p0 + std::abs(v0 - w);
  double dissipated = 0.0;
  rep.min_step_slack = std::numeric_limits<double>::infinity();
  rep.min_iterated_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const int k = static_cast<int>(i);
    if (r.k != k) rep.violations.push_back({k, "record index out of sequence", double(r.k)});
    if (r.t != k * h) rep.violations.push_back({k, "record time differs from k*h", r.t});
    if (!(r.volume > 0.0)) rep.violations.push_back({k, "nonpositive volume", r.volume});
    if (!(r.perimeter > 0.0)) rep.violations.push_back({k, "nonpositive perimeter", r.perimeter});
    if (!(std::abs(r.lambda) <= c)) {
      rep.violations.push_back({k, "multiplier exceeds 1/sqrt(h)", r.lambda});
    }
    if (!(std::abs(r.volume - w) <= trap)) {
      rep.violations.push_back({k, "volume trap |V-omega| <= sqrt(h) P0 broken", r.volume});
    }
    if (i == 0) continue;
    const auto& p = recs[i - 1];
    const double slack = dissipation_slack(p.perimeter, p.volume, r.perimeter, r.dissipation_term,
                                           r.volume, h, w);
    rep.step_slack.push_back(slack);
    rep.min_step_slack = std::min(rep.min_step_slack, slack);
    if (!(slack >= 0.0)) rep.violations.push_back({k, "negative dissipation slack", slack});
    dissipated += r.dissipation_term;
    const double it = top - (r.perimeter + dissipated + volume_penalty(r.volume, h, w));
    rep.iterated_slack.push_back(it);
    rep.min_iterated_slack = std::min(rep.min_iterated_slack, it);
    if (!(it >= 0.0)) rep.violations.push_back({k, "negative iterated dissipation slack", it});
    if (std::abs(p.volume - w) <= half_cell && r.perimeter > p.perimeter) {
      rep.perimeter_increase_flags.push_back(k);
    }
  }
  if (rep.step_slack.empty()) rep.min_step_slack = rep.min_iterated_slack = 0.0;
  return rep;
}

ContinuityStats continuity_stats(const FlowTrace& trace) {
  std::vector<const StepRecord*> stored;
  for (const auto& r : trace.records) {
    if (r.set) stored.push_back(&r);
  }
  if (stored.size() < 2) {
    throw Error(ErrorCode::RangeError, "continuity statistics need two stored sets");
  }
  ContinuityStats st;
  const double cv = trace.spec.cell_volume();
  for (std::size_t i = 0; i < stored.size(); ++i) {
    for (std::size_t j = i + 1; j < stored.size(); ++j) {
      const double dt = stored[j]->t - stored[i]->t;
      if (dt < trace.h * (1.0 - 1e-12)) continue;
      const double d = static_cast<double>(symmetric_difference_count(*stored[i]->set, *stored[j]->set)) * cv;
      const double ratio = d / std::sqrt(dt);
      ++st.pairs;
      if (ratio > st.constant || st.pairs == 1) {
        st.constant = ratio;
        st.worst_s = stored[i]->t;
        st.worst_t = stored[j]->t;
      }
    }
  }
  return st;
}

MultiplierStats multiplier_stats(const FlowTrace& trace, double t1, double t2) {
  const double h = trace.h;
  const double last = trace.records.empty() ? 0.0 : trace.records.back().t;
  if (!(h * (1.0 - 1e-12) <= t1 && t1 < t2 && t2 <= last * (1.0 + 1e-12))) {
    throw Error(ErrorCode::RangeError, "multiplier statistics need h <= T1 < T2 <= horizon");
  }
  MultiplierStats st;
  st.t1 = t1;
  st.t2 = t2;
  const double half_cell = 0.5 * trace.spec.cell_volume();
  const double eps = 1e-9 * h;
  for (const auto& r : trace.records) {
    if (r.t <= t1 + eps || r.t > t2 + eps) continue;
    st.lambda_sq_integral += r.lambda * r.lambda * h;
    st.max_abs_lambda = std::max(st.max_abs_lambda, std::abs(r.lambda));
    if (std::abs(r.volume - trace.target_volume) > half_cell) st.violation_measure += h;
  }
  st.violation_constant = st.violation_measure / (h * (t2 - t1 + 1.0));
  st.lambda_constant = st.lambda_sq_integral / (t2 - t1 + 1.0);
  return st;
}

ComparisonStats comparison_stats(const FlowTrace& trace) {
  ComparisonStats st;
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const auto& prev = trace.records[i - 1];
    const auto& r = trace.records[i];
    for (const auto& c : r.components) {
      if (c.parent < 0 || c.parent >= static_cast<int>(prev.components.size())) continue;
      const double r0 = prev.components[c.parent].inscribed_radius;
      const double drop = r0 * r0 - c.inscribed_radius * c.inscribed_radius;
      const double ratio = std::max(0.0, drop) / ((1.0 + std::abs(r.lambda)) * trace.h);
      st.constant = std::max(st.constant, ratio);
      ++st.pairs;
    }
  }
  return st;
}

MovementStats movement_stats(const FlowTrace& trace) {
  MovementStats st;
  const double root_h = std::sqrt(trace.h);
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const auto& prev = trace.records[i - 1];
    const auto& r = trace.records[i];
    if (!prev.set || !r.set) continue;
    ++st.steps;
    if (symmetric_difference_count(*prev.set, *r.set) == 0) continue;
    const GridSet a = prev.set->decode(trace.spec);
    const GridSet b = r.set->decode(trace.spec);
    const ScalarField d = signed_distance(a);
    const auto& oa = a.occupancy();
    const auto& ob = b.occupancy();
    for (std::size_t idx = 0; idx < oa.size(); ++idx) {
      if (oa[idx] == ob[idx]) continue;
      const double ratio = std::abs(d[idx]) / root_h;
      if (ratio > st.constant) {
        st.constant = ratio;
        st.worst_k = r.k;
      }
    }
  }
  if (st.steps == 0) {
    throw Error(ErrorCode::RangeError, "movement statistics need two consecutive stored sets");
  }
  return st;
}

std::string trace_csv(const FlowTrace& trace) {
  std::ostringstream out;
  out << "k,t,volume,perimeter,lambda,dissipation_term,sym_diff_volume\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.t) << ',' << format_double(r.volume) << ','
        << format_double(r.perimeter) << ',' << format_double(r.lambda) << ','
        << format_double(r.dissipation_term) << ',' << format_double(r.sym_diff_volume) << '\n';
  }
  return out.str();
}

std::vector<StepRecord> parse_trace_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ck = t.column("k"), ct = t.column("t"), cv = t.column("volume"),
                    cp = t.column("perimeter"), cl = t.column("lambda"),
                    cd = t.column("dissipation_term"), cs = t.column("sym_diff_volume");
  std::vector<StepRecord> recs;
  try {
    for (const auto& row : t.rows) {
      StepRecord r;
      r.k = static_cast<int>(parse_int(row[ck]));
      r.t = parse_double(row[ct]);
      r.volume = parse_double(row[cv]);
      r.perimeter = parse_double(row[cp]);
      r.lambda = parse_double(row[cl]);
      r.dissipation_term = parse_double(row[cd]);
      r.sym_diff_volume = parse_double(row[cs]);
      recs.push_back(std::move(r));
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::IoError, path + ": " + e.what());
  }
  return recs;
}

}  // namespace flatflow
