#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "warpflow/boundary.hpp"
#include "warpflow/diagnostics.hpp"
#include "warpflow/flow.hpp"
#include "warpflow/run.hpp"

namespace warpflow {

/// Parsed scenario file. Format: one `dotted.key = value` per line, `#` starts
/// a comment. Numbers may be written as fractions ("1/64").
struct ScenarioConfig {
  std::string name;
  std::string mode = "run";
  std::uint64_t seed = 0;

  Shape shape;
  double h = 0.0;

  std::string target;
  std::string warp_kind = "constant";
  double warp_a = 1.0;
  double warp_b = 0.0;

  Preset phi, psi, phi0;

  StepperConfig stepper;
  ThresholdConfig thresholds;
  Schedule schedule;

  std::string output_directory;
  std::vector<std::string> formats{"json", "csv", "mesh", "snapshots", "plots"};
  double twin_delta = 1e-3;

  bool wants(const std::string& format) const;
  TargetManifold make_target() const;
  WarpFunction make_warp() const;
};

/// Decimal number or fraction such as "1/64". Throws std::invalid_argument.
double parse_number(const std::string& text);

/// Throws ConfigParseError with the offending line and key.
ScenarioConfig parse_config(std::istream& in, const std::string& default_name = "scenario");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Everything built from a config: mesh, data and stepper.
struct ScenarioSetup {
  explicit ScenarioSetup(const ScenarioConfig& config);
  ScenarioSetup(const ScenarioSetup&) = delete;
  ScenarioSetup& operator=(const ScenarioSetup&) = delete;

  ScenarioConfig config;
  DomainMesh mesh;
  TargetManifold target;
  WarpFunction warp;
  BoundaryData data;
  FlowStepper stepper;
};

struct ScenarioResult {
  DiagnosticsReport report;
  FlowState final_state;
  std::filesystem::path output_dir;  ///< empty if nothing was written
  int exit_code = 0;                 ///< 0 when all hard checks pass, 2 otherwise
};

/// Runs one scenario, evaluates the diagnostics and, when `output_dir` is
/// non-empty, writes the requested formats there.
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& output_dir = {});

/// Fills report.checks, convergence and v_norm from the series (used by run and check).
void evaluate_checks(DiagnosticsReport& report, double final_tension);

struct TwinReport {
  std::string name;
  double delta = 0.0;
  std::uint64_t seed = 0;
  double initial_difference = 0.0;  ///< ||u1(0) - u2(0)||_L2
  double sup_difference = 0.0;      ///< sup_t ||u1 - u2||_L2 over matched steps
  double final_difference = 0.0;
  double amplification = 0.0;       ///< sup_difference / delta (0 when delta = 0)
  long matched_samples = 0;
  long unmatched_samples = 0;
  std::vector<std::array<double, 2>> series;  ///< (t, ||u1 - u2||)
};

TwinReport twin_run(const ScenarioConfig& config, double delta, const std::filesystem::path& output_dir = {});

void write_twin_report(const TwinReport& report, const std::filesystem::path& path);

void write_mesh(const DomainMesh& mesh, std::ostream& os);
void write_snapshot(const FlowState& state, std::ostream& os);

/// Output root: explicit value, else $WARPFLOW_OUT, else the config's
/// output.directory, else "warpflow_out".
std::filesystem::path output_root(const std::optional<std::string>& explicit_dir, const ScenarioConfig& config);

} // namespace warpflow
