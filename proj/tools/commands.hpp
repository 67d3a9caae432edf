#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flatflow::cli {

/// Exit statuses shared by every command.
enum Exit : int { Ok = 0, Usage = 1, SchemeAbort = 2, VerificationFailure = 3 };

/// Runs a scenario and writes trace.csv, metadata.json, raster snapshots
/// under rasters/ and scheduled reports under diagnostics/.
int cmd_flow(const std::string& config_path, const std::optional<std::string>& out_dir,
             std::ostream& out, std::ostream& err);

/// Diagnoses a raster file or a scenario config's initial shape and writes
/// report.json and montiel_ros.csv. The default output directory is
/// "<input stem>_diagnosis" next to the input.
int cmd_diagnose(const std::string& input, std::optional<double> lambda,
                 const std::optional<std::string>& out_dir, std::ostream& out, std::ostream& err);

/// Audits a cmd_flow output directory and writes audit.json into it.
int cmd_verify(const std::string& dir, std::ostream& out, std::ostream& err);

/// Integrates the ball ODE and writes CSV t,r1..rN,lambda to `out_path`, or
/// to `out` when no path is given.
int cmd_oracle_balls(const std::vector<double>& radii, int n, double horizon, double dt,
                     const std::optional<std::string>& out_path, std::ostream& out,
                     std::ostream& err);

/// Parses the command line and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flatflow::cli
