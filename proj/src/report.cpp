#include "warpflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace warpflow {

using nlohmann::json;

namespace {

// JSON has no infinities; store them as strings so a report round-trips.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

json points_json(const std::vector<std::array<double, 2>>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p[0], p[1]});
  return a;
}

std::vector<std::array<double, 2>> points_from(const json& j) {
  std::vector<std::array<double, 2>> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

} // namespace

json to_json(const DiagnosticsReport& r) {
  json j;
  j["name"] = r.name;
  const ThresholdConfig& th = r.thresholds;
  j["thresholds"] = {{"epsilon", th.epsilon},     {"r_detect", th.r_detect},
                     {"r_grid", th.r_grid},       {"epsilon_prime", th.effective_epsilon_prime()},
                     {"r_struwe", th.r_struwe},   {"c_mono", th.c_mono},
                     {"persistence", th.persistence}};
  const RunConstants& k = r.constants;
  j["constants"] = {{"h", k.h},
                    {"dt_nominal", k.dt_nominal},
                    {"lambda", k.lambda},
                    {"Lambda", k.Lambda},
                    {"area", k.area},
                    {"E_phi0", k.E_phi0},
                    {"E_psi_ext", k.E_psi_ext},
                    {"grad_psi_l4", k.grad_psi_l4},
                    {"phi_c2_proxy", k.phi_c2_proxy},
                    {"E_g0", k.E_g0},
                    {"vertex_count", k.vertex_count},
                    {"triangle_count", k.triangle_count},
                    {"two_ball_centers", points_json(k.two_ball_centers)},
                    {"two_ball_radii", k.two_ball_radii}};
  json recs = json::array();
  for (const auto& e : r.records) {
    recs.push_back({{"t", e.t},
                    {"dt", e.dt},
                    {"step", e.step},
                    {"E_u", e.E_u},
                    {"E_v", e.E_v},
                    {"E_beta_v", e.E_beta_v},
                    {"E_g", e.E_g},
                    {"kinetic_increment", e.kinetic_increment},
                    {"kinetic_cum", e.kinetic_cum},
                    {"laplacian_proxy", e.laplacian_proxy},
                    {"grad_u_l4", e.grad_u_l4},
                    {"grad_v_l4", e.grad_v_l4},
                    {"lady_w4", e.lady_w4},
                    {"lady_w2", e.lady_w2},
                    {"lady_grad_w2", e.lady_grad_w2},
                    {"tension", e.tension},
                    {"max_local_energy", e.max_local_energy},
                    {"v_iterations", e.v_iterations},
                    {"v_residual", e.v_residual}});
  }
  j["records"] = std::move(recs);
  json frames = json::array();
  for (const auto& f : r.frames) {
    json peaks = json::array();
    for (const auto& p : f.peaks) peaks.push_back({p.vertex, p.x, p.y, p.energy});
    frames.push_back({{"t", f.t}, {"step", f.step}, {"peaks", peaks}, {"two_ball", f.two_ball},
                      {"struwe_sup", f.struwe_sup}});
  }
  j["frames"] = std::move(frames);
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back({{"T", e.T},
                      {"step", e.step},
                      {"r_detect", e.r_detect},
                      {"vertices", e.vertices},
                      {"points", points_json(e.points)},
                      {"peak_energies", e.peak_energies},
                      {"underflow", e.underflow}});
  }
  j["events"] = std::move(events);
  json uf = json::array();
  for (const auto& u : r.underflows) uf.push_back({{"t", u.t}, {"step", u.step}});
  j["underflows"] = std::move(uf);
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"constant", num(c.constant)},
                      {"tolerance", num(c.tolerance)},
                      {"hard", c.hard},
                      {"note", c.note}});
  }
  j["checks"] = std::move(checks);
  if (r.convergence) {
    const ConvergenceReport& c = *r.convergence;
    j["convergence"] = {{"t_i", c.t_i},
                        {"dtu_norms", c.dtu_norms},
                        {"final_dtu_norm", c.final_dtu_norm},
                        {"final_tension", c.final_tension},
                        {"stationarity_tolerance", c.stationarity_tolerance},
                        {"residual_tolerance", c.residual_tolerance},
                        {"converged", c.converged},
                        {"converged_at", c.converged_at},
                        {"status", c.status},
                        {"s_infinity", points_json(c.s_infinity)}};
  }
  j["rejected_steps"] = r.rejected_steps;
  j["v_norm"] = r.v_norm;
  j["notes"] = r.notes;
  j["all_hard_checks_pass"] = r.hard_checks_pass();
  return j;
}

DiagnosticsReport report_from_json(const json& j) {
  DiagnosticsReport r;
  r.name = j.value("name", "");
  const json& th = j.at("thresholds");
  r.thresholds.epsilon = th.at("epsilon").get<double>();
  r.thresholds.r_detect = th.at("r_detect").get<double>();
  r.thresholds.r_grid = th.at("r_grid").get<std::vector<double>>();
  r.thresholds.epsilon_prime = th.at("epsilon_prime").get<double>();
  r.thresholds.r_struwe = th.at("r_struwe").get<double>();
  r.thresholds.c_mono = th.at("c_mono").get<double>();
  r.thresholds.persistence = th.at("persistence").get<int>();
  const json& k = j.at("constants");
  RunConstants& c = r.constants;
  c.h = k.at("h").get<double>();
  c.dt_nominal = k.at("dt_nominal").get<double>();
  c.lambda = k.at("lambda").get<double>();
  c.Lambda = k.at("Lambda").get<double>();
  c.area = k.at("area").get<double>();
  c.E_phi0 = k.at("E_phi0").get<double>();
  c.E_psi_ext = k.at("E_psi_ext").get<double>();
  c.grad_psi_l4 = k.at("grad_psi_l4").get<double>();
  c.phi_c2_proxy = k.at("phi_c2_proxy").get<double>();
  c.E_g0 = k.at("E_g0").get<double>();
  c.vertex_count = k.at("vertex_count").get<int>();
  c.triangle_count = k.at("triangle_count").get<int>();
  c.two_ball_centers = points_from(k.at("two_ball_centers"));
  c.two_ball_radii = k.at("two_ball_radii").get<std::vector<double>>();
  for (const auto& e : j.at("records")) {
    EnergyRecord x;
    x.t = e.at("t").get<double>();
    x.dt = e.at("dt").get<double>();
    x.step = e.at("step").get<long>();
    x.E_u = e.at("E_u").get<double>();
    x.E_v = e.at("E_v").get<double>();
    x.E_beta_v = e.at("E_beta_v").get<double>();
    x.E_g = e.at("E_g").get<double>();
    x.kinetic_increment = e.at("kinetic_increment").get<double>();
    x.kinetic_cum = e.at("kinetic_cum").get<double>();
    x.laplacian_proxy = e.at("laplacian_proxy").get<double>();
    x.grad_u_l4 = e.at("grad_u_l4").get<double>();
    x.grad_v_l4 = e.at("grad_v_l4").get<double>();
    x.lady_w4 = e.at("lady_w4").get<double>();
    x.lady_w2 = e.at("lady_w2").get<double>();
    x.lady_grad_w2 = e.at("lady_grad_w2").get<double>();
    x.tension = e.at("tension").get<double>();
    x.max_local_energy = e.at("max_local_energy").get<double>();
    x.v_iterations = e.at("v_iterations").get<int>();
    x.v_residual = e.at("v_residual").get<double>();
    r.records.push_back(x);
  }
  for (const auto& f : j.at("frames")) {
    Frame x;
    x.t = f.at("t").get<double>();
    x.step = f.at("step").get<long>();
    for (const auto& p : f.at("peaks"))
      x.peaks.push_back({p.at(0).get<int>(), p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()});
    x.two_ball = f.at("two_ball").get<std::vector<double>>();
    x.struwe_sup = f.at("struwe_sup").get<double>();
    r.frames.push_back(std::move(x));
  }
  for (const auto& e : j.at("events")) {
    SingularityEvent x;
    x.T = e.at("T").get<double>();
    x.step = e.at("step").get<long>();
    x.r_detect = e.at("r_detect").get<double>();
    x.vertices = e.at("vertices").get<std::vector<int>>();
    x.points = points_from(e.at("points"));
    x.peak_energies = e.at("peak_energies").get<std::vector<double>>();
    x.underflow = e.at("underflow").get<bool>();
    r.events.push_back(std::move(x));
  }
  for (const auto& u : j.at("underflows")) r.underflows.push_back({u.at("t").get<double>(), u.at("step").get<long>()});
  for (const auto& c : j.at("checks")) {
    r.checks.push_back({c.at("name").get<std::string>(), c.at("pass").get<bool>(), to_num(c.at("constant")),
                        to_num(c.at("tolerance")), c.at("hard").get<bool>(), c.at("note").get<std::string>()});
  }
  if (j.contains("convergence")) {
    const json& cj = j.at("convergence");
    ConvergenceReport cr;
    cr.t_i = cj.at("t_i").get<std::vector<double>>();
    cr.dtu_norms = cj.at("dtu_norms").get<std::vector<double>>();
    cr.final_dtu_norm = cj.at("final_dtu_norm").get<double>();
    cr.final_tension = cj.at("final_tension").get<double>();
    cr.stationarity_tolerance = cj.at("stationarity_tolerance").get<double>();
    cr.residual_tolerance = cj.at("residual_tolerance").get<double>();
    cr.converged = cj.at("converged").get<bool>();
    cr.converged_at = cj.at("converged_at").get<double>();
    cr.status = cj.at("status").get<std::string>();
    cr.s_infinity = points_from(cj.at("s_infinity"));
    r.convergence = cr;
  }
  r.rejected_steps = j.value("rejected_steps", 0L);
  r.v_norm = j.value("v_norm", 0.0);
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

DiagnosticsReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path);
  return report_from_json(json::parse(in));
}

void save_report(const DiagnosticsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(report).dump(1) << '\n';
}

void write_series_csv(const DiagnosticsReport& report, std::ostream& os) {
  os << "t,E_u,E_v,E_beta_v,E_g,kinetic_cum,max_local_energy,dt\n";
  char buf[512];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.E_u, r.E_v,
                  r.E_beta_v, r.E_g, r.kinetic_cum, r.max_local_energy, r.dt);
    os << buf;
  }
}

double solution_norm(const DiagnosticsReport& report) {
  double gu = 0.0, gv = 0.0, integral = 0.0;
  for (const auto& r : report.records) {
    gu = std::max(gu, std::sqrt(2.0 * r.E_u));
    gv = std::max(gv, std::pow(r.grad_v_l4, 0.25));
    integral += r.kinetic_increment + r.laplacian_proxy * r.dt;
  }
  return gu + gv + integral;
}

} // namespace warpflow
