#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/report.hpp"
#include "warpflow/scenario.hpp"

using namespace warpflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(name = tiny
mesh.shape = square
mesh.h = 1/8
target = sphere
boundary.phi = geodesic k=1 bump=0
boundary.phi0 = geodesic k=1 bump=0.5
boundary.psi = constant c=0
schedule.t_end = 0.05
)";

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ConfigParseError parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigParseError& e) {
    return e;
  }
  FAIL("expected ConfigParseError");
  return ConfigParseError("", 0, "");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("warpflow_unit_" + leaf);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST_CASE("numbers and fractions") {
  CHECK(parse_number("0.25") == 0.25);
  CHECK(parse_number("1/64") == 1.0 / 64);
  CHECK(parse_number(" -3e-2 ") == -0.03);
  CHECK_THROWS_AS(parse_number("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("1/2/3"), std::invalid_argument);
}

TEST_CASE("minimal config parses with defaults") {
  const ScenarioConfig c = parse(kMinimal);
  CHECK(c.name == "tiny");
  CHECK(c.mode == "run");
  CHECK(c.h == 0.125);
  CHECK(c.shape.kind == ShapeKind::UnitSquare);
  CHECK(c.phi0.name == "geodesic");
  CHECK(c.phi0.get("bump", 0.0) == 0.5);
  CHECK(c.stepper.sigma == 0.2);
  CHECK(c.thresholds.epsilon == 1.0);
  CHECK(c.schedule.diagnostic_stride == 1);
}

TEST_CASE("config errors carry line and key") {
  std::string missing = kMinimal;
  missing.erase(missing.find("target = sphere\n"), std::string("target = sphere\n").size());
  const ConfigParseError e1 = parse_error(missing);
  CHECK(e1.key == "target");

  const ConfigParseError e2 = parse_error(std::string(kMinimal) + "colour = blue\n");
  CHECK(e2.key == "colour");
  CHECK(e2.line == 9);

  const ConfigParseError e3 = parse_error(std::string(kMinimal) + "mesh.h = 1/16\n");
  CHECK(e3.key == "mesh.h");
  CHECK(e3.line == 9);

  std::string bad = kMinimal;
  bad.replace(bad.find("mesh.h = 1/8"), 12, "mesh.h = x");
  CHECK(parse_error(bad).line == 3);

  std::string neg = kMinimal;
  neg.replace(neg.find("mesh.h = 1/8"), 12, "mesh.h = -1");
  CHECK(parse_error(neg).key == "mesh.h");

  CHECK(parse_error(std::string(kMinimal) + "warp.kind = linear_height\nwarp.a = 1\nwarp.b = 2\n").key == "warp.b");
  CHECK(parse_error(std::string(kMinimal) + "no equals sign\n").line == 9);

  std::string preset = kMinimal;
  preset.replace(preset.find("constant c=0"), 12, "wobble c=0");
  CHECK(parse_error(preset).key == "boundary.psi");

  CHECK(parse_error(std::string(kMinimal) + "stepper.scheme = rk4\n").key == "stepper.scheme");
  CHECK(parse_error(std::string(kMinimal) + "stepper.sigma = 0.9\n").key == "stepper.sigma");
}

TEST_CASE("comments and blank lines are ignored") {
  const ScenarioConfig c = parse(std::string("# header\n\n") + kMinimal + "  # trailing\nseed = 9 # inline\n");
  CHECK(c.seed == 9);
}

TEST_CASE("every shipped scenario parses") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(WARPFLOW_SCENARIO_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    const ScenarioConfig c = load_config(entry.path());
    CHECK(c.name == entry.path().stem().string());
    ++count;
  }
  CHECK(count >= 6);
}

TEST_CASE("heat_decay energy decays at the first eigenvalue") {
  const ScenarioConfig c = load_config(fs::path(WARPFLOW_SCENARIO_DIR) / "heat_decay.cfg");
  const ScenarioResult r = run_scenario(c);
  CHECK(r.exit_code == 0);
  CHECK(r.report.events.empty());
  const auto& rec = r.report.records;
  const double ratio = rec.back().E_u / rec.front().E_u;
  const double expected = std::exp(-4.0 * std::numbers::pi * std::numbers::pi * (rec.back().t - rec.front().t));
  CHECK(ratio == doctest::Approx(expected).epsilon(0.02));
  for (std::size_t j = 1; j < rec.size(); ++j) CHECK(rec[j].E_g <= rec[j - 1].E_g);
  CHECK(r.report.records.back().max_local_energy < 0.1);
}

TEST_CASE("harmonic_fixed_point stays put and converges immediately") {
  const ScenarioConfig c = load_config(fs::path(WARPFLOW_SCENARIO_DIR) / "harmonic_fixed_point.cfg");
  const ScenarioResult r = run_scenario(c);
  CHECK(r.exit_code == 0);
  for (const auto& rec : r.report.records) CHECK(rec.E_u < 1e-20);
  REQUIRE(r.report.convergence.has_value());
  CHECK(r.report.convergence->converged);
}

TEST_CASE("outputs are written and the CSV is reproducible") {
  ScenarioConfig c = parse(kMinimal);
  c.schedule.snapshot_stride = 2;
  const fs::path a = scratch("a"), b = scratch("b");
  const ScenarioResult ra = run_scenario(c, a);
  run_scenario(c, b);
  CHECK(ra.exit_code == 0);
  for (const char* f : {"report.json", "series.csv", "mesh.txt", "plots/plots.txt", "plots/energy.dat"})
    CHECK_MESSAGE(fs::exists(a / f), f);
  CHECK(fs::exists(a / "snapshots"));
  const std::string csv = slurp(a / "series.csv");
  CHECK(csv.rfind("t,E_u,E_v,E_beta_v,E_g,kinetic_cum,max_local_energy,dt\n", 0) == 0);
  CHECK(csv == slurp(b / "series.csv"));

  const DiagnosticsReport back = load_report((a / "report.json").string());
  CHECK(to_json(back).dump() == to_json(ra.report).dump());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("formats restrict what is written") {
  ScenarioConfig c = parse(std::string(kMinimal) + "output.formats = csv\n");
  const fs::path a = scratch("fmt");
  run_scenario(c, a);
  CHECK(fs::exists(a / "series.csv"));
  CHECK_FALSE(fs::exists(a / "report.json"));
  CHECK_FALSE(fs::exists(a / "mesh.txt"));
  fs::remove_all(a);
}

TEST_CASE("twin run: zero perturbation gives zero difference") {
  const ScenarioConfig c = parse(kMinimal);
  const TwinReport z = twin_run(c, 0.0);
  CHECK(z.sup_difference == 0.0);
  CHECK(z.amplification == 0.0);
  CHECK(z.unmatched_samples == 0);
  const TwinReport d = twin_run(c, 1e-3);
  CHECK(d.initial_difference > 0.0);
  CHECK(d.sup_difference >= d.initial_difference);
  CHECK(d.matched_samples > 2);
}

TEST_CASE("output root precedence") {
  ScenarioConfig c = parse(kMinimal);
  CHECK(output_root(std::string("x"), c) == fs::path("x"));
  c.output_directory = "from_config";
  if (!std::getenv("WARPFLOW_OUT")) CHECK(output_root(std::nullopt, c) == fs::path("from_config"));
}
