#include "commands.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <utility>

#include "flatflow/alexandrov.hpp"
#include "flatflow/config.hpp"
#include "flatflow/error.hpp"
#include "flatflow/flow.hpp"
#include "flatflow/geometry.hpp"
#include "flatflow/io.hpp"
#include "flatflow/oracle.hpp"
#include "flatflow/step.hpp"

namespace flatflow::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

Json point_json(const Point& p, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

Json grid_json(const GridSpec& spec) {
  Json shape = Json::array();
  for (int a = 0; a < spec.dim; ++a) shape.push_back(spec.shape[a]);
  return Json{{"dim", spec.dim},
              {"shape", shape},
              {"spacing", spec.spacing},
              {"origin", point_json(spec.origin, spec.dim)}};
}

Json versions_json() {
  return Json{{"flatflow", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__},
              {"cplusplus", __cplusplus}};
}

std::string raster_name(int k, int dim) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "set_%06d.%s", k, dim == 2 ? "pgm" : "raw");
  return buf;
}

Json report_json(const Diagnosis& d) {
  const auto& r = d.report;
  Json centers = Json::array();
  for (const auto& c : r.balls.centers) centers.push_back(point_json(c, r.dim));
  Json density = Json::array();
  for (const auto& row : d.density) {
    density.push_back(Json{{"r", row.r},
                           {"min_ratio", row.min_ratio},
                           {"argmin", point_json(row.argmin, r.dim)},
                           {"flagged", row.flagged}});
  }
  Json diameters = Json::array();
  for (const auto& row : d.diameters) {
    diameters.push_back(Json{{"component", row.component},
                             {"diameter", row.diameter},
                             {"curvature_integral", row.curvature_integral},
                             {"ratio", row.ratio}});
  }
  return Json{{"status", r.status},
              {"dim", r.dim},
              {"n", r.n},
              {"lambda_hat", r.lambda_hat},
              {"epsilon", r.epsilon},
              {"R", r.R},
              {"q", r.q},
              {"N", r.N},
              {"centers", centers},
              {"hausdorff_one_sided", r.hausdorff_one_sided},
              {"hausdorff_symmetric", r.hausdorff_symmetric},
              {"perimeter", r.perimeter},
              {"volume", r.volume},
              {"perimeter_residual", r.perimeter_residual},
              {"rho_minus", r.rho_minus},
              {"rho_plus", r.rho_plus},
              {"inclusion_deficit", r.inclusion_deficit},
              {"inclusion_excess", r.inclusion_excess},
              {"dropped_fraction", r.dropped_fraction},
              {"dropped_alarm", r.dropped_alarm},
              {"smoothing", r.smoothing},
              {"noise_floor", r.noise_floor},
              {"epsilon_floored", r.epsilon_floored},
              {"r0", r.r0},
              {"core_cells", r.core_cells},
              {"gap_threshold", r.gap_threshold},
              {"threshold_stable", r.threshold_stable},
              {"delta", r.delta},
              {"outside_hypothesis", r.outside_hypothesis},
              {"density_profile", density},
              {"diameter_check", diameters}};
}

void write_diagnosis(const fs::path& dir, const std::string& stem, const Diagnosis& d) {
  write_text((dir / (stem + "report.json")).string(), report_json(d).dump(2) + "\n");
  write_text((dir / (stem + "montiel_ros.csv")).string(), montiel_ros_csv(d.table));
}

bool looks_like_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char head[2] = {0, 0};
  in.read(head, 2);
  if (in.gcount() < 2) return false;
  return (head[0] == 'P' && (head[1] == '2' || head[1] == '5')) || (head[0] == '3' && head[1] == ' ');
}

}  // namespace

int cmd_flow(const std::string& config_path, const std::optional<std::string>& out_dir,
             std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  GridSet initial;
  try {
    cfg = load_config(config_path);
    initial = initial_set(cfg);
  } catch (const Error& e) {
    err << "flow: " << e.what() << "\n";
    return Usage;
  }
  const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(cfg.output_dir);

  FlowConfig fc;
  fc.target_volume = cfg.target_volume;
  fc.step = cfg.step;
  // Every set stays in memory so scheduled diagnostics can use any record;
  // the configured stride only thins the raster snapshots.
  fc.snapshot_stride = 1;
  FlowTrace trace;
  try {
    // Admissibility of h is checked against the initial shape first.
    assemble_step(initial, cfg.h, fc.target_volume.value_or(default_target_volume(initial.spec())));
    trace = run_flow(initial, cfg.h, cfg.horizon, fc);
  } catch (const Error& e) {
    err << "flow: " << e.what() << "\n";
    const bool abort = e.code() == ErrorCode::StepTooLarge || e.code() == ErrorCode::EmptyMinimizer;
    return abort ? SchemeAbort : Usage;
  }

  try {
    const int steps = static_cast<int>(trace.records.size()) - 1;
    write_text((dir / "trace.csv").string(), trace_csv(trace));

    Json snapshots = Json::array();
    for (const auto& rec : trace.records) {
      if (rec.k % cfg.snapshot_stride != 0 && rec.k != steps) continue;
      const std::string name = raster_name(rec.k, trace.spec.dim);
      fs::create_directories(dir / "rasters");
      write_raster((dir / "rasters" / name).string(), rec.set->decode(trace.spec));
      snapshots.push_back(Json{{"k", rec.k}, {"t", rec.t}, {"file", "rasters/" + name}});
    }

    Json diagnostics = Json::array();
    for (double t : cfg.diagnostic_times) {
      const int k = std::clamp(static_cast<int>(std::lround(t / trace.h)), 0, steps);
      char stem[32];
      std::snprintf(stem, sizeof stem, "k_%06d.", k);
      Json entry{{"time", t}, {"k", k}, {"t", trace.records[k].t}};
      try {
        AlexandrovOptions opt;
        opt.delta = cfg.delta;
        const Diagnosis d = diagnose(trace.records[k].set->decode(trace.spec), std::nullopt, opt);
        write_diagnosis(dir / "diagnostics", stem, d);
        entry["report"] = std::string("diagnostics/") + stem + "report.json";
        entry["status"] = d.report.status;
        entry["N"] = d.report.N;
      } catch (const Error& e) {
        entry["error"] = e.what();
      }
      diagnostics.push_back(entry);
    }

    Json events = Json::array();
    for (const auto& e : trace.events) {
      events.push_back(Json{{"kind", to_string(e.kind)},
                            {"k", e.k},
                            {"t", e.t},
                            {"component", e.component},
                            {"volume", e.volume}});
    }
    int guarded = 0, stalled = 0;
    for (const auto& rec : trace.records) {
      guarded += rec.guarded;
      stalled += rec.stalled;
    }

    Json config = Json::object();
    for (const auto& [k, v] : cfg.entries) config[k] = v;
    Json meta{{"config", config},
              {"config_path", fs::absolute(config_path).string()},
              {"grid", grid_json(trace.spec)},
              {"h", trace.h},
              {"horizon", trace.horizon},
              {"target_volume", trace.target_volume},
              {"steps", steps},
              {"snapshot_stride", cfg.snapshot_stride},
              {"seed", cfg.seed},
              {"trace", "trace.csv"},
              {"snapshots", snapshots},
              {"events", events},
              {"guarded_steps", guarded},
              {"stalled_steps", stalled},
              {"diagnostics", diagnostics},
              {"versions", versions_json()}};
    write_text((dir / "metadata.json").string(), meta.dump(2) + "\n");
    out << "flow: " << steps << " steps written to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "flow: " << e.what() << "\n";
    return Usage;
  }
  return Ok;
}

int cmd_diagnose(const std::string& input, std::optional<double> lambda,
                 const std::optional<std::string>& out_dir, std::ostream& out, std::ostream& err) {
  GridSet set;
  AlexandrovOptions opt;
  try {
    if (!fs::exists(input)) throw Error(ErrorCode::IoError, "no such file: " + input);
    if (looks_like_raster(input)) {
      set = read_raster(input);
    } else {
      const ScenarioConfig cfg = load_config(input);
      opt.delta = cfg.delta;
      set = initial_set(cfg);
    }
  } catch (const Error& e) {
    err << "diagnose: " << e.what() << "\n";
    return Usage;
  }
  const fs::path in(input);
  const fs::path dir = out_dir ? fs::path(*out_dir)
                               : in.parent_path() / (in.stem().string() + "_diagnosis");
  try {
    const Diagnosis d = diagnose(set, lambda, opt);
    write_diagnosis(dir, "", d);
    out << "diagnose: N=" << d.report.N << " epsilon=" << format_double(d.report.epsilon)
        << " status=" << d.report.status << "\n";
  } catch (const Error& e) {
    err << "diagnose: " << e.what() << "\n";
    return e.code() == ErrorCode::EmptyCore ? VerificationFailure : Usage;
  }
  return Ok;
}

int cmd_verify(const std::string& dir_text, std::ostream& out, std::ostream& err) {
  const fs::path dir(dir_text);
  FlowTrace trace;
  Json meta;
  std::vector<DissipationViolation> extra;
  try {
    if (!fs::exists(dir / "metadata.json") || !fs::exists(dir / "trace.csv")) {
      throw Error(ErrorCode::IoError, "missing metadata.json or trace.csv in " + dir_text);
    }
    try {
      meta = Json::parse(read_text((dir / "metadata.json").string()));
      trace.h = meta.at("h").get<double>();
      trace.horizon = meta.at("horizon").get<double>();
      trace.target_volume = meta.at("target_volume").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoError, std::string("metadata.json: ") + e.what());
    }
    trace.records = parse_trace_csv((dir / "trace.csv").string());
    if (trace.records.empty()) throw Error(ErrorCode::IoError, "trace.csv has no records");

    const int steps = meta.value("steps", -1);
    if (static_cast<int>(trace.records.size()) != steps + 1) {
      extra.push_back({steps, "record count differs from metadata steps",
                       static_cast<double>(trace.records.size())});
    }

    // Attach stored sets and cross-check them against the trace columns.
    std::optional<GridSet> prev_set;
    int prev_k = -2;
    for (const auto& snap : meta.value("snapshots", Json::array())) {
      const int k = snap.at("k").get<int>();
      const GridSet set = read_raster((dir / snap.at("file").get<std::string>()).string());
      if (k < 0 || k >= static_cast<int>(trace.records.size()) || trace.records[k].k != k) {
        extra.push_back({k, "snapshot without a matching record", 0.0});
        continue;
      }
      if (trace.spec.size() == 0) trace.spec = set.spec();
      auto& rec = trace.records[k];
      const double v = volume(set), p = perimeter(set);
      if (v != rec.volume) extra.push_back({k, "volume differs from snapshot", v - rec.volume});
      if (p != rec.perimeter) extra.push_back({k, "perimeter differs from snapshot", p - rec.perimeter});
      if (prev_set && prev_k == k - 1) {
        const StepEnergy e = assemble_step(*prev_set, trace.h, trace.target_volume);
        const double d = dissipation_term(set, e);
        const double sd = static_cast<double>(symmetric_difference_count(set, *prev_set)) *
                          set.spec().cell_volume();
        if (d != rec.dissipation_term) {
          extra.push_back({k, "dissipation_term differs from snapshots", d - rec.dissipation_term});
        }
        if (sd != rec.sym_diff_volume) {
          extra.push_back({k, "sym_diff_volume differs from snapshots", sd - rec.sym_diff_volume});
        }
      }
      if (k == 0) trace.initial_set = set;
      rec.set = RleSet(set);
      prev_set = set;
      prev_k = k;
    }
  } catch (const Error& e) {
    err << "verify: " << e.what() << "\n";
    return Usage;
  }

  const DissipationReport rep = verify_dissipation(trace);
  Json violations = Json::array();
  for (const std::vector<DissipationViolation>* list : {&rep.violations, &std::as_const(extra)}) {
    for (const auto& v : *list) violations.push_back(Json{{"k", v.k}, {"what", v.what}, {"value", v.value}});
  }
  Json audit{{"ok", violations.empty()},
             {"records", trace.records.size()},
             {"min_step_slack", rep.min_step_slack},
             {"min_iterated_slack", rep.min_iterated_slack},
             {"perimeter_increase_flags", rep.perimeter_increase_flags},
             {"violations", violations}};
  try {
    const ContinuityStats c = continuity_stats(trace);
    audit["continuity"] = Json{{"constant", c.constant},
                               {"pairs", c.pairs},
                               {"worst_s", c.worst_s},
                               {"worst_t", c.worst_t}};
  } catch (const Error& e) {
    audit["continuity"] = Json{{"error", e.what()}};
  }
  try {
    const MultiplierStats m = multiplier_stats(trace, trace.h, trace.records.back().t);
    audit["multiplier"] = Json{{"t1", m.t1},
                               {"t2", m.t2},
                               {"lambda_sq_integral", m.lambda_sq_integral},
                               {"violation_measure", m.violation_measure},
                               {"violation_constant", m.violation_constant},
                               {"lambda_constant", m.lambda_constant},
                               {"max_abs_lambda", m.max_abs_lambda}};
  } catch (const Error& e) {
    audit["multiplier"] = Json{{"error", e.what()}};
  }
  try {
    write_text((dir / "audit.json").string(), audit.dump(2) + "\n");
  } catch (const Error& e) {
    err << "verify: " << e.what() << "\n";
    return Usage;
  }
  if (!violations.empty()) {
    for (const auto& v : violations) {
      err << "verify: violation at k=" << v["k"].get<int>() << ": " << v["what"].get<std::string>()
          << " (" << format_double(v["value"].get<double>()) << ")\n";
    }
    return VerificationFailure;
  }
  out << "verify: ok, " << trace.records.size() << " records, min step slack "
      << format_double(rep.min_step_slack) << "\n";
  return Ok;
}

int cmd_oracle_balls(const std::vector<double>& radii, int n, double horizon, double dt,
                     const std::optional<std::string>& out_path, std::ostream& out,
                     std::ostream& err) {
  BallTrajectory traj;
  try {
    traj = ball_ode_integrate(radii, n, horizon, dt);
  } catch (const Error& e) {
    err << "oracle: " << e.what() << "\n";
    return Usage;
  }
  std::ostringstream csv;
  csv << "t";
  for (std::size_t i = 0; i < radii.size(); ++i) csv << ",r" << i + 1;
  csv << ",lambda\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    csv << format_double(traj.times[k]);
    for (double r : traj.radii[k]) csv << ',' << format_double(r);
    csv << ',' << format_double(traj.lambda[k]) << '\n';
  }
  if (!out_path) {
    out << csv.str();
    return Ok;
  }
  try {
    write_text(*out_path, csv.str());
  } catch (const Error& e) {
    err << "oracle: " << e.what() << "\n";
    return Usage;
  }
  for (const auto& e : traj.events) {
    out << "oracle: ball " << e.ball + 1 << " extinct at t=" << format_double(e.time) << "\n";
  }
  return Ok;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimizing-movement flat flow simulator and rigidity diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> flow_out;
  auto* flow = app.add_subcommand("flow", "Run a scenario config");
  flow->add_option("config", config_path, "Scenario config file")->required();
  flow->add_option("--out", flow_out, "Output directory (overrides output.dir)");

  std::string input;
  std::optional<double> lambda;
  std::optional<std::string> diag_out;
  auto* diag = app.add_subcommand("diagnose", "Diagnose a raster or a config's initial shape");
  diag->add_option("input", input, "Raster file or scenario config")->required();
  diag->add_option("--lambda", lambda, "Multiplier (default: estimated)");
  diag->add_option("--out", diag_out, "Output directory");

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "Audit a flow output directory");
  verify->add_option("dir", verify_dir, "Directory written by flow")->required();

  std::vector<double> radii;
  int n = 1;
  double horizon = 1.0, dt = 1e-3;
  std::optional<std::string> oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Analytic reference solutions");
  oracle->require_subcommand(1);
  auto* balls = oracle->add_subcommand("balls", "Ball-system ODE trajectory as CSV");
  balls->add_option("--radii", radii, "Initial radii")->required()->delimiter(',');
  balls->add_option("--n", n, "Curvature dimension (space dimension minus one)")->required();
  balls->add_option("--horizon", horizon, "Final time");
  balls->add_option("--dt", dt, "Step and record interval");
  balls->add_option("--out", oracle_out, "CSV path (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return Usage;
  }
  if (*flow) return cmd_flow(config_path, flow_out, out, err);
  if (*diag) return cmd_diagnose(input, lambda, diag_out, out, err);
  if (*verify) return cmd_verify(verify_dir, out, err);
  if (*balls) return cmd_oracle_balls(radii, n, horizon, dt, oracle_out, out, err);
  return Usage;
}

}  // namespace flatflow::cli
