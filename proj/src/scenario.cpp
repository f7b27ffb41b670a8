#include "warpflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/report.hpp"

namespace warpflow {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

} // namespace

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    if (s.find('/', slash + 1) != std::string::npos) throw std::invalid_argument("more than one '/' in number");
    const double den = parse_number(s.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("zero denominator");
    return parse_number(s.substr(0, slash)) / den;
  }
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters in number");
  return v;
}

namespace {

ShapeKind parse_shape(const std::string& s) {
  if (s == "square" || s == "unit_square") return ShapeKind::UnitSquare;
  if (s == "disk" || s == "unit_disk") return ShapeKind::UnitDisk;
  if (s == "annulus") return ShapeKind::Annulus;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

void write_plots(const DiagnosticsReport& rep, const fs::path& dir) {
  fs::create_directories(dir);
  char buf[256];
  {
    std::ofstream os(dir / "energy.dat");
    os << "# t E_u E_v E_beta_v E_g\n";
    for (const auto& r : rep.records) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g\n", r.t, r.E_u, r.E_v, r.E_beta_v, r.E_g);
      os << buf;
    }
  }
  {
    std::ofstream os(dir / "kinetic.dat");
    os << "# t kinetic_cum\n";
    for (const auto& r : rep.records) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.t, r.kinetic_cum);
      os << buf;
    }
  }
  {
    std::ofstream os(dir / "local_energy.dat");
    os << "# t max_local_energy\n";
    for (const auto& r : rep.records) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.t, r.max_local_energy);
      os << buf;
    }
  }
  {
    std::ofstream os(dir / "tension.dat");
    os << "# t tension_residual_l2\n";
    for (const auto& r : rep.records) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.t, r.tension);
      os << buf;
    }
  }
  std::ofstream os(dir / "plots.txt");
  os << "energy.dat        x: t   y: E_u, E_v, E_beta_v, E_g (columns 2-5)\n"
        "kinetic.dat       x: t   y: accumulated int int |d_t u|^2\n"
        "local_energy.dat  x: t   y: max ball energy at r_detect = "
     << rep.thresholds.r_detect << ", threshold " << rep.thresholds.epsilon
     << "\n"
        "tension.dat       x: t   y: L2 norm of the tension residual (log scale suggested)\n";
}

} // namespace

bool ScenarioConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

TargetManifold ScenarioConfig::make_target() const {
  if (target == "sphere") return TargetManifold::unit_sphere(3);
  if (target == "torus") return TargetManifold::flat_torus();
  throw std::invalid_argument("unknown target '" + target + "'");
}

WarpFunction ScenarioConfig::make_warp() const {
  if (warp_kind == "constant") return WarpFunction::constant(warp_a);
  if (warp_kind == "linear_height") return WarpFunction::linear_height(warp_a, warp_b);
  if (warp_kind == "sine") return WarpFunction::sine(warp_a, warp_b);
  throw std::invalid_argument("unknown warp kind '" + warp_kind + "'");
}

ScenarioConfig parse_config(std::istream& in, const std::string& default_name) {
  ScenarioConfig c;
  c.name = default_name;
  using Setter = std::function<void(const std::string&)>;
  auto num = [](double& dst) { return Setter([&dst](const std::string& v) { dst = parse_number(v); }); };
  auto preset = [](Preset& dst) { return Setter([&dst](const std::string& v) { dst = Preset::parse(v); }); };
  auto text = [](std::string& dst) { return Setter([&dst](const std::string& v) { dst = v; }); };
  auto count = [](long& dst) {
    return Setter([&dst](const std::string& v) {
      const double x = parse_number(v);
      if (x < 0 || x != std::floor(x)) throw std::invalid_argument("expected a non-negative integer");
      dst = static_cast<long>(x);
    });
  };
  std::string shape = "square";
  long seed = 0, persistence = c.thresholds.persistence;
  const std::map<std::string, Setter> keys{
      {"name", text(c.name)},
      {"mode", text(c.mode)},
      {"seed", count(seed)},
      {"mesh.shape", text(shape)},
      {"mesh.h", num(c.h)},
      {"mesh.r_in", num(c.shape.r_in)},
      {"mesh.r_out", num(c.shape.r_out)},
      {"target", text(c.target)},
      {"warp.kind", text(c.warp_kind)},
      {"warp.a", num(c.warp_a)},
      {"warp.b", num(c.warp_b)},
      {"boundary.phi", preset(c.phi)},
      {"boundary.psi", preset(c.psi)},
      {"boundary.phi0", preset(c.phi0)},
      {"stepper.scheme", [&](const std::string& v) { c.stepper.scheme = parse_scheme(v); }},
      {"stepper.sigma", num(c.stepper.sigma)},
      {"stepper.theta", num(c.stepper.theta)},
      {"stepper.dt_min", num(c.stepper.dt_min)},
      {"stepper.max_displacement", num(c.stepper.max_displacement)},
      {"stepper.tolerance", num(c.stepper.elliptic.tolerance)},
      {"thresholds.epsilon", num(c.thresholds.epsilon)},
      {"thresholds.r_detect", num(c.thresholds.r_detect)},
      {"thresholds.r_grid",
       [&](const std::string& v) {
         c.thresholds.r_grid.clear();
         for (const auto& item : split_list(v)) c.thresholds.r_grid.push_back(parse_number(item));
       }},
      {"thresholds.epsilon_prime", num(c.thresholds.epsilon_prime)},
      {"thresholds.r_struwe", num(c.thresholds.r_struwe)},
      {"thresholds.c_mono", num(c.thresholds.c_mono)},
      {"thresholds.persistence", count(persistence)},
      {"schedule.t_end", num(c.schedule.t_end)},
      {"schedule.snapshot_stride", count(c.schedule.snapshot_stride)},
      {"schedule.diagnostic_stride", count(c.schedule.diagnostic_stride)},
      {"output.directory", text(c.output_directory)},
      {"output.formats", [&](const std::string& v) { c.formats = split_list(v); }},
      {"twin.delta", num(c.twin_delta)},
  };

  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigParseError("expected 'key = value'", line_no, line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigParseError("unknown key '" + key + "'", line_no, key);
    if (seen.count(key)) throw ConfigParseError("duplicate key '" + key + "'", line_no, key);
    if (value.empty()) throw ConfigParseError("empty value for '" + key + "'", line_no, key);
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw ConfigParseError("bad value for '" + key + "': " + e.what(), line_no, key);
    }
    seen[key] = line_no;
  }

  for (const char* required : {"mesh.shape", "mesh.h", "target", "boundary.phi", "boundary.psi", "boundary.phi0",
                               "schedule.t_end"}) {
    if (!seen.count(required)) throw ConfigParseError(std::string("missing required key '") + required + "'", 0, required);
  }

  auto fail_at = [&](const std::string& key, const std::string& what) {
    const auto it = seen.find(key);
    throw ConfigParseError(what, it == seen.end() ? 0 : it->second, key);
  };
  try {
    c.shape.kind = parse_shape(shape);
  } catch (const std::exception& e) {
    fail_at("mesh.shape", e.what());
  }
  if (c.shape.kind != ShapeKind::Annulus) c.shape = {c.shape.kind, 0.0, 1.0};
  else if (!seen.count("mesh.r_in")) c.shape.r_in = 0.5;
  c.seed = static_cast<std::uint64_t>(seed);
  c.thresholds.persistence = static_cast<int>(persistence);
  if (!(c.h > 0.0)) fail_at("mesh.h", "mesh.h must be positive");
  if (c.mode != "run" && c.mode != "twin") fail_at("mode", "mode must be run or twin");
  try {
    (void)c.make_target();
  } catch (const std::exception& e) {
    fail_at("target", e.what());
  }
  try {
    (void)c.make_warp();
  } catch (const std::exception& e) {
    fail_at(seen.count("warp.b") ? "warp.b" : "warp.kind", e.what());
  }
  if (!is_known_map_preset(c.phi.name)) fail_at("boundary.phi", "unknown map preset '" + c.phi.name + "'");
  if (!is_known_map_preset(c.phi0.name)) fail_at("boundary.phi0", "unknown map preset '" + c.phi0.name + "'");
  if (!is_known_scalar_preset(c.psi.name)) fail_at("boundary.psi", "unknown scalar preset '" + c.psi.name + "'");
  const StepperConfig& st = c.stepper;
  if (!(st.sigma > 0.0 && st.sigma <= 0.5)) fail_at("stepper.sigma", "sigma must lie in (0, 0.5]");
  if (!(st.theta >= 0.5 && st.theta <= 1.0)) fail_at("stepper.theta", "theta must lie in [0.5, 1]");
  if (!(st.max_displacement > 0.0)) fail_at("stepper.max_displacement", "max_displacement must be positive");
  if (!(st.elliptic.tolerance > 0.0)) fail_at("stepper.tolerance", "tolerance must be positive");
  if (!(c.schedule.t_end >= 0.0)) fail_at("schedule.t_end", "t_end must be non-negative");
  if (c.schedule.diagnostic_stride < 1) fail_at("schedule.diagnostic_stride", "diagnostic stride must be >= 1");
  if (!(c.thresholds.epsilon > 0.0)) fail_at("thresholds.epsilon", "epsilon must be positive");
  if (!(c.thresholds.r_detect > 0.0)) fail_at("thresholds.r_detect", "r_detect must be positive");
  for (double r : c.thresholds.r_grid)
    if (!(r > 0.0)) fail_at("thresholds.r_grid", "r_grid radii must be positive");
  if (!(c.thresholds.r_struwe > 0.0)) fail_at("thresholds.r_struwe", "r_struwe must be positive");
  if (!(c.thresholds.c_mono >= 0.0)) fail_at("thresholds.c_mono", "c_mono must be non-negative");
  if (c.thresholds.persistence < 1) fail_at("thresholds.persistence", "persistence must be at least 1");
  if (!(c.twin_delta >= 0.0)) fail_at("twin.delta", "twin.delta must be non-negative");
  for (const auto& f : c.formats) {
    if (f != "json" && f != "csv" && f != "mesh" && f != "snapshots" && f != "plots")
      fail_at("output.formats", "unknown output format '" + f + "'");
  }
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open " + path.string(), 0, "");
  return parse_config(in, path.stem().string());
}

ScenarioSetup::ScenarioSetup(const ScenarioConfig& cfg)
    : config(cfg), mesh(build_mesh(cfg.shape, cfg.h)), target(cfg.make_target()), warp(cfg.make_warp()),
      data(make_boundary_data(mesh, target, cfg.phi, cfg.psi, cfg.phi0)),
      stepper(mesh, target, warp, data, cfg.stepper) {}

void evaluate_checks(DiagnosticsReport& rep, double final_tension) {
  rep.checks.clear();
  if (rep.records.size() >= 2) {
    rep.checks = inequality_suite(rep);
  } else {
    rep.notes.push_back("series shorter than two records: inequality suite skipped");
  }
  for (auto& c : singularity_count_checks(rep.events, rep.constants, rep.thresholds.epsilon)) rep.checks.push_back(c);
  if (!rep.records.empty()) rep.convergence = convergence_monitor(rep, final_tension);
  rep.v_norm = solution_norm(rep);
}

void write_mesh(const DomainMesh& mesh, std::ostream& os) {
  char buf[128];
  os << mesh.vertex_count() << ' ' << mesh.triangle_count() << '\n';
  for (const Point2& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p[0], p[1]);
    os << buf;
  }
  for (const Tri& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int v = 0; v < mesh.vertex_count(); ++v) os << (v ? " " : "") << (mesh.is_boundary(v) ? 1 : 0);
  os << '\n';
}

void write_snapshot(const FlowState& s, std::ostream& os) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.t);
  os << s.u.vertex_count() << ' ' << s.u.dim << ' ' << buf << '\n';
  for (int v = 0; v < s.u.vertex_count(); ++v) {
    for (int c = 0; c < s.u.dim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g ", s.u.at(v, c));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", s.v.at(v, 0));
    os << buf;
  }
}

fs::path output_root(const std::optional<std::string>& explicit_dir, const ScenarioConfig& config) {
  if (explicit_dir && !explicit_dir->empty()) return *explicit_dir;
  if (const char* env = std::getenv("WARPFLOW_OUT"); env && *env) return env;
  if (!config.output_directory.empty()) return config.output_directory;
  return "warpflow_out";
}

ScenarioResult run_scenario(const ScenarioConfig& config, const fs::path& output_dir) {
  const ScenarioSetup setup(config);
  ScenarioResult res;
  const bool write = !output_dir.empty();
  if (write) fs::create_directories(output_dir);

  SnapshotSink sink;
  if (write && config.wants("snapshots") && config.schedule.snapshot_stride > 0) {
    fs::create_directories(output_dir / "snapshots");
    sink = [&](const FlowState& s) {
      std::ofstream os(output_dir / "snapshots" / ("step_" + std::to_string(s.step_count) + ".txt"));
      write_snapshot(s, os);
    };
  }
  FlowRun run = run_flow(setup.stepper, config.thresholds, config.schedule, sink);
  run.report.name = config.name;
  run.report.notes.push_back("at a detected blow-up the flow continues from the last accepted discrete state, "
                             "not from a weak limit");
  evaluate_checks(run.report, setup.stepper.tension_residual(run.final_state).norm);

  res.exit_code = run.report.hard_checks_pass() ? 0 : 2;
  if (write) {
    res.output_dir = output_dir;
    if (config.wants("json")) save_report(run.report, (output_dir / "report.json").string());
    if (config.wants("csv")) {
      std::ofstream os(output_dir / "series.csv");
      write_series_csv(run.report, os);
    }
    if (config.wants("mesh")) {
      std::ofstream os(output_dir / "mesh.txt");
      write_mesh(setup.mesh, os);
    }
    if (config.wants("plots")) write_plots(run.report, output_dir / "plots");
  }
  res.report = std::move(run.report);
  res.final_state = std::move(run.final_state);
  return res;
}

TwinReport twin_run(const ScenarioConfig& config, double delta, const fs::path& output_dir) {
  if (!(delta >= 0.0)) throw std::invalid_argument("twin delta must be non-negative");
  const ScenarioSetup base(config);
  const DomainMesh& mesh = base.mesh;

  BoundaryData perturbed = base.data;
  perturbed.phi0 = perturb_tangentially(mesh, base.target, base.data.phi0, delta, config.seed);
  const FlowStepper other(mesh, base.target, base.warp, perturbed, config.stepper);

  struct Sample {
    long step;
    double t;
    DiscreteField u;
  };
  auto trajectory = [&](const FlowStepper& stepper) {
    std::vector<Sample> out;
    Schedule sched = config.schedule;
    sched.snapshot_stride = 1;
    run_flow(stepper, config.thresholds, sched, [&](const FlowState& s) { out.push_back({s.step_count, s.t, s.u}); });
    return out;
  };
  const auto a = trajectory(base.stepper);
  const auto b = trajectory(other);

  TwinReport rep;
  rep.name = config.name;
  rep.delta = delta;
  rep.seed = config.seed;
  std::size_t j = 0;
  for (const Sample& s : a) {
    while (j < b.size() && b[j].step < s.step) ++j;
    if (j == b.size() || b[j].step != s.step || std::abs(b[j].t - s.t) > 1e-12 * std::max(1.0, s.t)) {
      ++rep.unmatched_samples;
      continue;
    }
    DiscreteField d = s.u;
    for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= b[j].u.values[k];
    const double diff = lumped_l2_norm(mesh, d);
    if (rep.matched_samples == 0) rep.initial_difference = diff;
    ++rep.matched_samples;
    rep.sup_difference = std::max(rep.sup_difference, diff);
    rep.final_difference = diff;
    rep.series.push_back({s.t, diff});
  }
  rep.amplification = delta > 0.0 ? rep.sup_difference / delta : 0.0;
  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    write_twin_report(rep, output_dir / "twin.json");
  }
  return rep;
}

void write_twin_report(const TwinReport& r, const fs::path& path) {
  nlohmann::json j{{"name", r.name},
                   {"delta", r.delta},
                   {"seed", r.seed},
                   {"initial_difference", r.initial_difference},
                   {"sup_difference", r.sup_difference},
                   {"final_difference", r.final_difference},
                   {"amplification", r.amplification},
                   {"matched_samples", r.matched_samples},
                   {"unmatched_samples", r.unmatched_samples},
                   {"series", r.series}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(1) << '\n';
}

} // namespace warpflow
