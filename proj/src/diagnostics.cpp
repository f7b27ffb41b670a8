#include "warpflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace {

double dist2(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

// Degree-4 rule on the reference triangle (barycentric points, weights sum to 1).
struct QuadPoint {
  double l0, l1, l2, w;
};
constexpr QuadPoint kQuad4[] = {
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
};

std::vector<Point2> two_ball_points(const Shape& shape) {
  switch (shape.kind) {
  case ShapeKind::UnitSquare: return {{0.5, 0.5}, {0.3, 0.3}, {0.7, 0.3}, {0.3, 0.7}, {0.7, 0.7}};
  case ShapeKind::UnitDisk: return {{0.0, 0.0}, {0.4, 0.0}, {-0.4, 0.0}, {0.0, 0.4}, {0.0, -0.4}};
  case ShapeKind::Annulus: {
    std::vector<Point2> out;
    const double r = 0.5 * (shape.r_in + shape.r_out);
    for (int k = 0; k < 5; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 5.0;
      out.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return out;
  }
  }
  return {};
}

std::vector<double> two_ball_radii(const std::vector<double>& r_grid) {
  std::vector<double> radii;
  for (double r : r_grid) {
    radii.push_back(r);
    radii.push_back(2.0 * r);
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  return radii;
}

int radius_slot(const std::vector<double>& radii, double r) {
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] == r) return static_cast<int>(i);
  throw std::logic_error("radius not indexed");
}

std::vector<std::vector<int>> neighbor_lists(const DomainMesh& mesh, const std::vector<int>& centers, double radius) {
  const int n = static_cast<int>(centers.size());
  std::vector<std::vector<int>> out(n);
  if (n == 0) return out;
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
  for (int c : centers) {
    const Point2& p = mesh.vertices()[c];
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const int nx = static_cast<int>((xmax - xmin) / radius) + 1;
  const int ny = static_cast<int>((ymax - ymin) / radius) + 1;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx) * ny);
  auto cell = [&](const Point2& p) {
    return std::pair{std::min(nx - 1, static_cast<int>((p[0] - xmin) / radius)),
                     std::min(ny - 1, static_cast<int>((p[1] - ymin) / radius))};
  };
  for (int i = 0; i < n; ++i) {
    const auto [cx, cy] = cell(mesh.vertices()[centers[i]]);
    buckets[static_cast<std::size_t>(cy) * nx + cx].push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    const Point2& p = mesh.vertices()[centers[i]];
    const auto [cx, cy] = cell(p);
    for (int by = std::max(0, cy - 1); by <= std::min(ny - 1, cy + 1); ++by)
      for (int bx = std::max(0, cx - 1); bx <= std::min(nx - 1, cx + 1); ++bx)
        for (int j : buckets[static_cast<std::size_t>(by) * nx + bx]) {
          if (j == i) continue;
          const Point2& q = mesh.vertices()[centers[j]];
          if (dist2(p[0], p[1], q[0], q[1]) <= radius) out[i].push_back(j);
        }
  }
  return out;
}

double struwe_radius(const ThresholdConfig& th) { return th.r_struwe; }

} // namespace

void ThresholdConfig::validate(double diameter) const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("threshold epsilon must be positive");
  if (!(r_detect > 0.0 && r_detect < diameter)) throw std::invalid_argument("r_detect must lie in (0, diameter)");
  if (r_grid.empty()) throw std::invalid_argument("r_grid must not be empty");
  for (double r : r_grid)
    if (!(r > 0.0)) throw std::invalid_argument("r_grid radii must be positive");
  if (!(r_struwe > 0.0)) throw std::invalid_argument("r_struwe must be positive");
  if (persistence < 1) throw std::invalid_argument("persistence must be at least 1");
  if (!(c_mono >= 0.0)) throw std::invalid_argument("c_mono must be non-negative");
}

bool DiagnosticsReport::hard_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.hard || c.pass; });
}

EnergyRecord energy_functionals(const DomainMesh& mesh, const WarpFunction& warp, const FlowState& state,
                                const FlowState* previous) {
  EnergyRecord r;
  r.t = state.t;
  r.step = state.step_count;
  r.v_iterations = state.v_iterations;
  r.v_residual = state.v_residual;
  const auto gu = gradient_sq_per_triangle(mesh, state.u);
  const auto gv = gradient_sq_per_triangle(mesh, state.v);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tri = mesh.triangles()[t];
    const double a = mesh.area(t);
    const double beta =
        (warp(state.u.point(tri[0])) + warp(state.u.point(tri[1])) + warp(state.u.point(tri[2]))) / 3.0;
    r.E_u += 0.5 * a * gu[t];
    r.E_v += 0.5 * a * gv[t];
    r.E_beta_v += 0.5 * a * beta * gv[t];
    r.grad_u_l4 += a * gu[t] * gu[t];
    r.grad_v_l4 += a * gv[t] * gv[t];
  }
  r.E_g = r.E_u - r.E_beta_v;
  if (previous) {
    r.dt = state.t - previous->t;
    if (r.dt > 0.0) {
      double s = 0.0;
      for (int v = 0; v < mesh.vertex_count(); ++v) {
        const VecK d = state.u.point(v) - previous->u.point(v);
        s += mesh.lumped_mass(v) * dot(d, d);
      }
      r.kinetic_increment = s / r.dt;
    }
  }
  return r;
}

DiagnosticsEngine::DiagnosticsEngine(const FlowStepper& stepper, ThresholdConfig thresholds)
    : stepper_(&stepper), thresholds_(std::move(thresholds)),
      detect_centers_(lattice_centers(stepper.mesh(), 0.5 * thresholds_.r_detect, false)),
      detect_(stepper.mesh(), detect_centers_, {thresholds_.r_detect}),
      two_ball_(stepper.mesh(), {}, {1.0}), struwe_(stepper.mesh(), {}, {1.0}) {
  const DomainMesh& mesh = stepper.mesh();
  thresholds_.validate(mesh.diameter());
  detect_neighbors_ = neighbor_lists(mesh, detect_centers_,
                                     std::max(0.75 * thresholds_.r_detect, 1.01 * mesh.max_edge()));

  std::vector<int> tb_centers;
  for (const Point2& p : two_ball_points(mesh.shape())) {
    const int v = mesh.nearest_vertex(p);
    tb_centers.push_back(v);
    constants_.two_ball_centers.push_back(mesh.vertices()[v]);
  }
  constants_.two_ball_radii = two_ball_radii(thresholds_.r_grid);
  two_ball_ = BallIndex(mesh, tb_centers, constants_.two_ball_radii);
  struwe_ = BallIndex(mesh, lattice_centers(mesh, 0.5 * struwe_radius(thresholds_), false),
                      {struwe_radius(thresholds_)});

  const WarpFunction& warp = stepper.warp();
  const BoundaryData& bd = stepper.data();
  constants_.h = mesh.target_h();
  constants_.dt_nominal = stepper.cfl_dt();
  constants_.lambda = warp.lower_bound();
  constants_.Lambda = warp.upper_bound();
  constants_.area = mesh.total_area();
  constants_.E_phi0 = dirichlet_energy(mesh, bd.phi0);
  constants_.E_psi_ext = dirichlet_energy(mesh, bd.psi_ext);
  constants_.grad_psi_l4 = gradient_lp_integral(mesh, bd.psi_ext, 4.0);
  double sup_phi = 0.0, sup_grad = 0.0;
  for (int v : mesh.boundary_vertices()) sup_phi = std::max(sup_phi, norm(bd.phi.point(v)));
  for (double g : gradient_sq_per_triangle(mesh, bd.phi_ext)) sup_grad = std::max(sup_grad, std::sqrt(g));
  constants_.phi_c2_proxy = sup_phi + sup_grad;
  constants_.vertex_count = mesh.vertex_count();
  constants_.triangle_count = mesh.triangle_count();
}

std::vector<double> DiagnosticsEngine::local_energies(const FlowState& state) const {
  const auto dens = energy_density(stepper_->mesh(), state.u);
  std::vector<double> out(detect_centers_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detect_.sum(dens, static_cast<int>(i), 0);
  return out;
}

double DiagnosticsEngine::max_local_energy(const FlowState& state) const {
  const auto e = local_energies(state);
  return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
}

EnergyRecord DiagnosticsEngine::record(const FlowState& state, const FlowState* previous) const {
  const DomainMesh& mesh = stepper_->mesh();
  EnergyRecord r = energy_functionals(mesh, stepper_->warp(), state, previous);

  const DiscreteField lap = discrete_laplacian(mesh, stepper_->laplacian(), state.u);
  for (int v : mesh.interior_vertices()) {
    const VecK l = lap.point(v);
    r.laplacian_proxy += mesh.lumped_mass(v) * dot(l, l);
  }
  r.tension = stepper_->tension_residual(state).norm;

  const DiscreteField& ext = stepper_->data().phi_ext;
  DiscreteField w = state.u;
  for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] -= ext.values[k];
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tri = mesh.triangles()[t];
    const double a = mesh.area(t);
    for (const QuadPoint& q : kQuad4) {
      double s = 0.0;
      for (int c = 0; c < w.dim; ++c) {
        const double wc = q.l0 * w.at(tri[0], c) + q.l1 * w.at(tri[1], c) + q.l2 * w.at(tri[2], c);
        s += wc * wc;
      }
      r.lady_w2 += a * q.w * s;
      r.lady_w4 += a * q.w * s * s;
    }
  }
  r.lady_grad_w2 = 2.0 * dirichlet_energy(mesh, w);
  r.max_local_energy = max_local_energy(state);
  return r;
}

Frame DiagnosticsEngine::frame(const FlowState& state) const {
  const DomainMesh& mesh = stepper_->mesh();
  Frame f;
  f.t = state.t;
  f.step = state.step_count;
  const auto dens = energy_density(mesh, state.u);

  std::vector<double> e(detect_centers_.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = detect_.sum(dens, static_cast<int>(i), 0);
  const double floor = 0.1 * thresholds_.epsilon;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!(e[i] > floor)) continue;
    bool is_max = true;
    for (int j : detect_neighbors_[i]) {
      if (e[j] > e[i] || (e[j] == e[i] && j < static_cast<int>(i))) {
        is_max = false;
        break;
      }
    }
    if (!is_max) continue;
    const int v = detect_centers_[i];
    f.peaks.push_back({v, mesh.vertices()[v][0], mesh.vertices()[v][1], e[i]});
  }
  std::sort(f.peaks.begin(), f.peaks.end(), [](const LocalPeak& a, const LocalPeak& b) {
    return a.energy != b.energy ? a.energy > b.energy : a.vertex < b.vertex;
  });
  if (f.peaks.size() > 64) f.peaks.resize(64);

  // Per center and r in r_grid: E(B_r), E(B_2r) and the energy weighted by a
  // cutoff equal to 1 on B_r and decaying linearly to 0 at 2r.
  const auto& radii = constants_.two_ball_radii;
  for (std::size_t c = 0; c < two_ball_.centers().size(); ++c) {
    const Point2& x0 = mesh.vertices()[two_ball_.centers()[c]];
    for (double r : thresholds_.r_grid) {
      const int ir = radius_slot(radii, r), i2 = radius_slot(radii, 2.0 * r);
      const double er = two_ball_.sum(dens, static_cast<int>(c), ir);
      const double e2 = two_ball_.sum(dens, static_cast<int>(c), i2);
      double cut = 0.0;
      for (int t : two_ball_.members(static_cast<int>(c), i2)) {
        const Point2 b = mesh.barycenter(t);
        const double phi = std::clamp((2.0 * r - dist2(b[0], b[1], x0[0], x0[1])) / r, 0.0, 1.0);
        cut += phi * phi * dens[t];
      }
      f.two_ball.push_back(er);
      f.two_ball.push_back(e2);
      f.two_ball.push_back(cut);
    }
  }

  for (std::size_t c = 0; c < struwe_.centers().size(); ++c)
    f.struwe_sup = std::max(f.struwe_sup, struwe_.sum(dens, static_cast<int>(c), 0));
  return f;
}

double monotone_tolerance(const DiagnosticsReport& report) {
  const double eg0 = report.records.empty() ? report.constants.E_g0 : report.records.front().E_g;
  const double h = report.constants.h;
  return 1e-6 + report.thresholds.c_mono * (report.constants.dt_nominal + h * h) * std::abs(eg0);
}

const std::vector<std::string>& fitted_constant_names() {
  static const std::vector<std::string> names{"two_ball_C1", "two_ball_C2", "ladyzhenskaya", "struwe_proxy",
                                              "w22_proxy"};
  return names;
}

std::vector<CheckResult> inequality_suite(const DiagnosticsReport& report) {
  const auto& rec = report.records;
  if (rec.size() < 2) throw InsufficientSeries("inequality suite needs at least two records");
  const RunConstants& k = report.constants;
  const double tol = monotone_tolerance(report);
  const double budget = k.E_phi0 + k.Lambda * k.E_psi_ext;
  std::vector<CheckResult> out;

  {
    CheckResult c{"energy_monotone", true, -std::numeric_limits<double>::infinity(), tol, true, ""};
    for (std::size_t j = 1; j < rec.size(); ++j) c.constant = std::max(c.constant, rec[j].E_g - rec[j - 1].E_g);
    c.pass = c.constant <= tol;
    c.note = "max E_g(t_{j+1}) - E_g(t_j)";
    out.push_back(c);
  }
  {
    // E_g(t) + K(t) - K(s) - E_g(s) - tol (n_t - n_s) <= 0 for all s < t.
    CheckResult c{"energy_integrated", true, -std::numeric_limits<double>::infinity(), 0.0, true, ""};
    auto g = [&](const EnergyRecord& r) { return r.E_g + r.kinetic_cum - tol * static_cast<double>(r.step); };
    double gmin = g(rec[0]);
    for (std::size_t j = 1; j < rec.size(); ++j) {
      c.constant = std::max(c.constant, g(rec[j]) - gmin);
      gmin = std::min(gmin, g(rec[j]));
    }
    c.pass = c.constant <= 0.0;
    c.note = "max over s<t of E_g(t) + kinetic(s,t) - E_g(s) - steps*tol_mono";
    out.push_back(c);
  }
  {
    CheckResult c{"dirichlet_u_bound", true, -std::numeric_limits<double>::infinity(), tol, true, ""};
    for (const auto& r : rec) c.constant = std::max(c.constant, r.E_u - budget);
    c.pass = c.constant <= tol;
    c.note = "max E_u(t) - (E(phi0) + Lambda E(psi_ext))";
    out.push_back(c);
  }
  {
    CheckResult c{"dirichlet_v_bound", true, -std::numeric_limits<double>::infinity(), tol, true, ""};
    for (const auto& r : rec) c.constant = std::max(c.constant, r.E_v - k.Lambda / k.lambda * k.E_psi_ext);
    c.pass = c.constant <= tol;
    c.note = "max E_v(t) - (Lambda/lambda) E(psi_ext)";
    out.push_back(c);
  }
  {
    CheckResult c{"kinetic_budget", true, rec.back().kinetic_cum - budget, tol, true, ""};
    c.pass = c.constant <= tol;
    c.note = "sum of kinetic increments - (E(phi0) + Lambda E(psi_ext))";
    out.push_back(c);
  }
  {
    CheckResult c{"warp_sandwich", true, -std::numeric_limits<double>::infinity(), 0.0, true, ""};
    double worst_scale = 0.0;
    for (const auto& r : rec) {
      c.constant = std::max(c.constant, std::max(k.lambda * r.E_v - r.E_beta_v, r.E_beta_v - k.Lambda * r.E_v));
      worst_scale = std::max(worst_scale, r.E_v);
    }
    c.tolerance = 1e-12 * (1.0 + k.Lambda * worst_scale);
    c.pass = c.constant <= c.tolerance;
    c.note = "max of lambda E_v - E_beta_v and E_beta_v - Lambda E_v";
    out.push_back(c);
  }

  // Two-ball: fitted from the cutoff-weighted energies, which sit between E(B_r) and E(B_2r).
  {
    CheckResult c1{"two_ball_C1", true, 0.0, 0.0, false, ""};
    CheckResult c2{"two_ball_C2", true, 0.0, 0.0, false, ""};
    const auto& fr = report.frames;
    const std::size_t nr = report.thresholds.r_grid.size();
    double worst_gap = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> pairs;
    for (int lag : {1, 5, 10}) {
      for (std::size_t j = static_cast<std::size_t>(lag); j < fr.size(); ++j) {
        const Frame& ft = fr[j];
        const Frame& fs = fr[j - lag];
        const double dt = ft.t - fs.t;
        if (!(dt > 0.0) || ft.two_ball.size() != fs.two_ball.size()) continue;
        const std::size_t ncent = ft.two_ball.size() / (3 * nr);
        for (std::size_t ci = 0; ci < ncent; ++ci)
          for (std::size_t ri = 0; ri < nr; ++ri) {
            const std::size_t base = 3 * (ci * nr + ri);
            const double r = report.thresholds.r_grid[ri];
            const double inc = std::max(0.0, ft.two_ball[base + 2] - fs.two_ball[base + 2]);
            c1.constant = std::max(c1.constant, inc * r * r / dt);
            c2.constant = std::max(c2.constant, inc / dt);
            pairs.emplace_back(ft.two_ball[base] - fs.two_ball[base + 1], dt / (r * r));
          }
      }
    }
    for (const auto& [gap, scaled] : pairs) worst_gap = std::max(worst_gap, gap - c1.constant * scaled);
    c1.pass = pairs.empty() || worst_gap <= 1e-12;
    c1.note = "E(B_r,t) <= E(B_2r,s) + C1 (t-s)/r^2 with C1 fitted on cutoff energies";
    c2.note = "same increments fitted as C2 (t-s)";
    out.push_back(c1);
    out.push_back(c2);
  }
  {
    CheckResult c{"ladyzhenskaya", true, 0.0, 0.0, false, "int|w|^4 / (int|w|^2 (int|grad w|^2 + int|w|^2/|M|)), w = u - phi_ext"};
    for (const auto& r : rec) {
      const double den = r.lady_w2 * (r.lady_grad_w2 + r.lady_w2 / k.area);
      if (den > 0.0) c.constant = std::max(c.constant, r.lady_w4 / den);
    }
    out.push_back(c);
  }
  double lap_int = 0.0, eu_int = 0.0, g4_int = 0.0;
  for (std::size_t j = 1; j < rec.size(); ++j) {
    lap_int += rec[j].laplacian_proxy * rec[j].dt;
    eu_int += 2.0 * rec[j].E_u * rec[j].dt;
    g4_int += rec[j].grad_u_l4 * rec[j].dt;
  }
  {
    const double r = report.thresholds.r_struwe;
    double sup = 0.0;
    for (const auto& f : report.frames) sup = std::max(sup, 2.0 * f.struwe_sup);
    const double den = sup * (lap_int + eu_int / (r * r));
    // den is rounding noise for a (near) constant map
    CheckResult c{"struwe_proxy", true, den > 1e-24 ? g4_int / den : 0.0, 0.0, false,
                  "proxy: |grad^2 u|^2 replaced by |Delta_h u|^2"};
    out.push_back(c);
  }
  {
    const double r = report.thresholds.r_struwe;
    const double T = rec.back().t - rec.front().t;
    const double num = rec.back().E_u + lap_int;
    const double den = (1.0 + T / (r * r)) * budget +
                       T / (r * r) * (k.grad_psi_l4 + k.phi_c2_proxy * k.phi_c2_proxy);
    CheckResult c{"w22_proxy", true, den > 0.0 ? num / den : 0.0, 0.0, false,
                  "proxy: |grad^2 u|^2 replaced by |Delta_h u|^2"};
    out.push_back(c);
  }
  return out;
}

ConcentrationTracker::ConcentrationTracker(double epsilon, double r_detect, int persistence)
    : epsilon_(epsilon), r_(r_detect), persistence_(persistence) {}

std::vector<SingularityEvent> ConcentrationTracker::feed(const Frame& frame) {
  const bool first = frames_seen_++ == 0;

  std::vector<const LocalPeak*> kept;
  for (const LocalPeak& p : frame.peaks) {
    if (!(p.energy > epsilon_)) continue;
    bool separated = true;
    for (const LocalPeak* q : kept)
      if (dist2(p.x, p.y, q->x, q->y) < 2.0 * r_) separated = false;
    if (separated) kept.push_back(&p);
  }

  std::vector<char> matched(tracks_.size(), 0);
  std::vector<Track> next;
  for (const LocalPeak* p : kept) {
    int best = -1;
    double best_d = 2.0 * r_;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (matched[i]) continue;
      const double d = dist2(p->x, p->y, tracks_[i].x, tracks_[i].y);
      if (d <= best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    Track tr;
    if (best >= 0) {
      matched[best] = 1;
      tr = tracks_[best];
      ++tr.above;
    } else {
      tr.above = 1;
      tr.crossed = !first;
      tr.start_t = frame.t;
      tr.start_step = frame.step;
    }
    tr.x = p->x;
    tr.y = p->y;
    tr.vertex = p->vertex;
    if (tr.event >= 0) {
      auto& pe = events_[tr.event].peak_energies[tr.slot];
      pe = std::max(pe, p->energy);
    }
    next.push_back(tr);
  }

  std::vector<SingularityEvent> fresh;
  SingularityEvent ev;
  ev.r_detect = r_;
  ev.T = std::numeric_limits<double>::infinity();
  for (Track& tr : next) {
    if (!tr.crossed || tr.confirmed || tr.above < persistence_) continue;
    tr.confirmed = true;
    tr.event = static_cast<int>(events_.size());
    tr.slot = static_cast<int>(ev.vertices.size());
    if (tr.start_t < ev.T) {
      ev.T = tr.start_t;
      ev.step = tr.start_step;
    }
    ev.vertices.push_back(tr.vertex);
    ev.points.push_back({tr.x, tr.y});
    double e = 0.0;
    for (const LocalPeak* p : kept)
      if (p->vertex == tr.vertex) e = p->energy;
    ev.peak_energies.push_back(e);
  }
  if (!ev.vertices.empty()) {
    events_.push_back(ev);
    fresh.push_back(ev);
  }
  tracks_ = std::move(next);
  return fresh;
}

void ConcentrationTracker::mark_underflow(double) {
  for (const Track& tr : tracks_)
    if (tr.event >= 0) events_[tr.event].underflow = true;
}

std::vector<SingularityEvent> singularity_detect(const std::vector<Frame>& frames, const ThresholdConfig& th) {
  ConcentrationTracker tracker(th.epsilon, th.r_detect, th.persistence);
  for (const Frame& f : frames) tracker.feed(f);
  return tracker.events();
}

std::vector<CheckResult> singularity_count_checks(const std::vector<SingularityEvent>& events,
                                                  const RunConstants& k, double epsilon) {
  const double bound = (k.E_phi0 + k.Lambda * k.E_psi_ext) / epsilon;
  double points = 0.0;
  for (const auto& e : events) points += static_cast<double>(e.points.size());
  std::vector<CheckResult> out;
  out.push_back({"singular_time_count", static_cast<double>(events.size()) <= bound,
                 static_cast<double>(events.size()), bound, true, "K <= (E(phi0) + Lambda E(psi)) / eps"});
  out.push_back({"singular_point_count", points <= 2.0 * bound * bound, points, 2.0 * bound * bound, true,
                 "sum l_k <= 2 ((E(phi0) + Lambda E(psi)) / eps)^2"});
  return out;
}

ConvergenceReport convergence_monitor(const DiagnosticsReport& report, double final_tension) {
  ConvergenceReport c;
  const auto& rec = report.records;
  const double eg0 = rec.empty() ? report.constants.E_g0 : rec.front().E_g;
  c.stationarity_tolerance = 1e-5 * (1.0 + std::abs(eg0));
  c.residual_tolerance = 10.0 * report.constants.h;
  c.final_tension = final_tension;

  std::vector<double> rate(rec.size(), 0.0);
  for (std::size_t j = 1; j < rec.size(); ++j)
    rate[j] = rec[j].dt > 0.0 ? std::sqrt(rec[j].kinetic_increment / rec[j].dt) : 0.0;
  if (rec.size() > 1) rate[0] = rate[1];

  if (rec.size() > 1 && rate[1] > 0.0) {
    double level = rate[1];
    std::size_t j = 1;
    for (int i = 1; i <= 200 && j < rec.size(); ++i) {
      level *= 0.5;
      while (j < rec.size() && !(rate[j] < level)) ++j;
      if (j == rec.size()) break;
      c.t_i.push_back(rec[j].t);
      c.dtu_norms.push_back(rate[j]);
    }
  }
  c.final_dtu_norm = rec.empty() ? 0.0 : rate.back();
  for (std::size_t j = 0; j < rec.size(); ++j) {
    if (rate[j] < c.stationarity_tolerance && rec[j].tension < c.residual_tolerance) {
      c.converged_at = rec[j].t;
      break;
    }
  }
  c.converged = c.final_dtu_norm < c.stationarity_tolerance && final_tension < c.residual_tolerance;
  c.status = c.converged ? "converged" : "NotStationary";
  if (!c.converged) c.converged_at = -1.0;

  const auto& fr = report.frames;
  if (!fr.empty()) {
    const double eps = report.thresholds.effective_epsilon_prime();
    const double r = report.thresholds.r_detect;
    const std::size_t late = fr.size() - std::max<std::size_t>(1, fr.size() / 4);
    for (const LocalPeak& p : fr.back().peaks) {
      if (!(p.energy > eps)) continue;
      bool persists = true;
      for (std::size_t j = late; j < fr.size() && persists; ++j) {
        bool found = false;
        for (const LocalPeak& q : fr[j].peaks)
          if (q.energy > eps && dist2(p.x, p.y, q.x, q.y) < 2.0 * r) found = true;
        persists = found;
      }
      bool separated = true;
      for (const auto& s : c.s_infinity)
        if (dist2(p.x, p.y, s[0], s[1]) < 2.0 * r) separated = false;
      if (persists && separated) c.s_infinity.push_back({p.x, p.y});
    }
  }
  return c;
}

std::vector<CheckResult> compare_fitted_constants(const DiagnosticsReport& coarse, const DiagnosticsReport& fine,
                                                  double factor, double floor) {
  auto lookup = [](const DiagnosticsReport& r, const std::string& name) {
    for (const auto& c : r.checks)
      if (c.name == name) return c.constant;
    for (const auto& c : inequality_suite(r))
      if (c.name == name) return c.constant;
    throw std::logic_error("missing check " + name);
  };
  std::vector<CheckResult> out;
  for (const std::string& name : fitted_constant_names()) {
    const double a = lookup(coarse, name), b = lookup(fine, name);
    CheckResult c;
    c.name = name + "_stability";
    c.hard = true;
    c.tolerance = factor;
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (hi <= floor) {
      c.constant = 1.0;
      c.note = "both constants below floor";
    } else if (lo <= 0.0) {
      c.constant = std::numeric_limits<double>::infinity();
      c.pass = false;
    } else {
      c.constant = hi / lo;
    }
    c.pass = c.constant <= factor;
    std::ostringstream os;
    os << "coarse " << a << ", fine " << b;
    if (!c.note.empty()) os << "; " << c.note;
    c.note = os.str();
    out.push_back(c);
  }
  return out;
}

} // namespace warpflow
