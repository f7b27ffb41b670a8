#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "warpflow/boundary.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/flow.hpp"
#include "warpflow/run.hpp"

using namespace warpflow;

namespace {

FlowStepper sphere_stepper(const DomainMesh& m, const std::string& phi, const std::string& phi0, const std::string& psi,
                           WarpFunction warp = WarpFunction::constant(1.0), StepperConfig cfg = {}) {
  const auto s = TargetManifold::unit_sphere(3);
  return FlowStepper(m, s, warp, make_boundary_data(m, s, Preset::parse(phi), Preset::parse(psi), Preset::parse(phi0)),
                     cfg);
}

double max_diff(const DiscreteField& a, const DiscreteField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

FlowState advance_to(const FlowStepper& st, FlowState s, double t_end) {
  while (s.t < t_end - 1e-14) {
    s.dt_current = std::min(s.dt_current, t_end - s.t);
    s = st.step(s);
  }
  return s;
}

} // namespace

TEST_CASE("constant map is a fixed point") {
  const DomainMesh m = build_mesh(Shape::unit_disk(), 1.0 / 8);
  for (Scheme scheme : {Scheme::SemiImplicitProjected, Scheme::ExplicitProjected}) {
    StepperConfig cfg;
    cfg.scheme = scheme;
    const FlowStepper st = sphere_stepper(m, "constant p=0,0.6,0.8", "constant p=0,0.6,0.8", "constant c=2",
                                          WarpFunction::linear_height(2.0, 1.0), cfg);
    const FlowState s0 = st.initial_state();
    CHECK(st.tension_residual(s0).norm < 1e-12);
    for (double dt : {1e-4, 0.01, 0.5}) {
      const StepAttempt a = st.attempt(s0, dt);
      CHECK(a.accepted);
      CHECK(max_diff(a.state.u, s0.u) < 1e-12);
      CHECK(a.state.t == doctest::Approx(dt));
    }
  }
}

TEST_CASE("torus: discrete harmonic map has negligible residual") {
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const DomainMesh m = build_mesh(Shape::unit_square(), h);
    const auto torus = TargetManifold::flat_torus();
    DiscreteField trace(m.vertex_count(), 2);
    for (int v = 0; v < m.vertex_count(); ++v) {
      const auto& p = m.vertices()[v];
      trace.at(v, 0) = 0.3 + p[0] * p[0] - p[1] * p[1];
      trace.at(v, 1) = 0.2 + std::sin(2 * p[0]) * std::exp(p[1]);
    }
    BoundaryData data;
    data.phi = trace;
    data.phi_ext = harmonic_extension(m, trace);
    data.phi0 = data.phi_ext;
    data.psi = DiscreteField(m.vertex_count(), 1, 0.5);
    data.psi_ext = data.psi;
    const FlowStepper st(m, torus, WarpFunction::constant(1.0), data, StepperConfig{});
    CHECK(st.tension_residual(st.initial_state()).norm <= h);
  }
}

TEST_CASE("equator geodesic has second-order residual") {
  double prev = 0.0;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    // On the split square grid the lumped Laplacian of (cos x, sin x, 0) is parallel to u, so
    // only rounding is left; the disk rings show the actual truncation order.
    const DomainMesh sq = build_mesh(Shape::unit_square(), h);
    const FlowStepper ss = sphere_stepper(sq, "geodesic k=1 bump=0", "geodesic k=1 bump=0", "constant c=0");
    CHECK(ss.tension_residual(ss.initial_state()).norm <= 1e-6 * h * h);

    const DomainMesh m = build_mesh(Shape::unit_disk(), h);
    const FlowStepper st = sphere_stepper(m, "geodesic k=3 bump=0", "geodesic k=3 bump=0", "constant c=0");
    const TensionResidual r = st.tension_residual(st.initial_state());
    for (int v : m.boundary_vertices()) CHECK(r.field.at(v, 0) == 0.0);
    CHECK(r.norm <= 10.0 * h * h);
    if (prev > 0.0) CHECK(prev / r.norm > 3.0);
    prev = r.norm;
  }
}

TEST_CASE("steps keep u on the sphere and the boundary data exact") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const FlowStepper st = sphere_stepper(m, "geodesic k=2 bump=0", "geodesic k=2 bump=0.8", "linear a=1 b=0.5",
                                        WarpFunction::linear_height(2.0, 1.0));
  FlowState s = st.initial_state();
  for (int k = 0; k < 20; ++k) {
    const FlowState next = st.step(s);
    CHECK(next.t > s.t);
    CHECK(next.step_count == s.step_count + 1);
    s = next;
    for (int v = 0; v < m.vertex_count(); ++v) CHECK(std::abs(norm(s.u.point(v)) - 1.0) < 1e-12);
    for (int v : m.boundary_vertices()) {
      for (int c = 0; c < 3; ++c) CHECK(s.u.at(v, c) == st.data().phi.at(v, c));
      CHECK(s.v.at(v, 0) == st.data().psi.at(v, 0));
    }
    CHECK(max_diff(s.v, st.solve_v(s.u).v) < 1e-8);
  }
}

TEST_CASE("constant warp decouples v from u and u from psi") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const FlowStepper a = sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "linear a=1 b=0.5");
  const FlowStepper b = sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "saddle a=3");
  FlowState sa = a.initial_state(), sb = b.initial_state();
  for (int k = 0; k < 10; ++k) {
    sa = a.step(sa);
    sb = b.step(sb);
    CHECK(max_diff(sa.v, a.data().psi_ext) < 1e-8);
    CHECK(max_diff(sb.v, b.data().psi_ext) < 1e-8);
  }
  CHECK(max_diff(sa.u, sb.u) < 1e-12);
  CHECK(sa.t == sb.t);
}

TEST_CASE("semi-implicit and explicit schemes agree to first order in dt") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  StepperConfig ex;
  ex.scheme = Scheme::ExplicitProjected;
  const FlowStepper se = sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "constant c=0");
  const FlowStepper sx =
      sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "constant c=0", WarpFunction::constant(1.0), ex);
  CHECK(sx.cfl_dt() == doctest::Approx(0.2 / 256));
  CHECK(se.cfl_dt() == doctest::Approx(0.2 / 16));
  const double t_end = 0.05;
  const FlowState ue = advance_to(se, se.initial_state(), t_end);
  const FlowState ux = advance_to(sx, sx.initial_state(), t_end);
  const double change = max_diff(ue.u, se.initial_state().u);
  const double gap = max_diff(ue.u, ux.u);
  CHECK(change > 0.05);
  CHECK(gap < se.cfl_dt());
}

TEST_CASE("rejected steps halve dt and underflow below dt_min") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 8);
  StepperConfig cfg;
  cfg.max_displacement = 1e-9;
  cfg.dt_min = 1e-3;
  const FlowStepper st =
      sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "constant c=0", WarpFunction::constant(1.0), cfg);
  const FlowState s0 = st.initial_state();
  const StepAttempt a = st.attempt(s0, s0.dt_current);
  CHECK_FALSE(a.accepted);
  CHECK(a.displacement > st.displacement_limit());
  CHECK_THROWS_AS(st.step(s0), TimestepUnderflow);

  const FlowState f = st.forced_step(s0);
  CHECK(f.t == doctest::Approx(cfg.dt_min));
  for (int v = 0; v < m.vertex_count(); ++v) CHECK(std::abs(norm(f.u.point(v)) - 1.0) < 1e-12);
}

TEST_CASE("stepper config validation") {
  StepperConfig c;
  CHECK_NOTHROW(c.validate());
  c.sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.sigma = 0.6;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.theta = 0.3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.max_displacement = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_scheme("explicit") == Scheme::ExplicitProjected);
  CHECK(parse_scheme(scheme_name(Scheme::SemiImplicitProjected)) == Scheme::SemiImplicitProjected);
  CHECK_THROWS(parse_scheme("rk4"));
}

TEST_CASE("default dt_min scales with h squared") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const FlowStepper st = sphere_stepper(m, "constant p=0,0,1", "constant p=0,0,1", "constant c=0");
  CHECK(st.dt_min() == doctest::Approx(1e-6 / 256));
}

TEST_CASE("run_flow with t_end = 0 returns the initial state") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 8);
  const FlowStepper st = sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "constant c=0");
  const FlowRun run = run_flow(st, ThresholdConfig{}, Schedule{0.0, 0, 1});
  CHECK(run.report.records.empty());
  CHECK(run.final_state.u.values == st.initial_state().u.values);
  CHECK(run.final_state.t == 0.0);
}

TEST_CASE("run_flow hits t_end exactly and emits snapshots") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 8);
  const FlowStepper st = sphere_stepper(m, "geodesic k=1 bump=0", "geodesic k=1 bump=0.5", "constant c=0");
  int snaps = 0;
  const FlowRun run = run_flow(st, ThresholdConfig{}, Schedule{0.3, 2, 1}, [&](const FlowState&) { ++snaps; });
  CHECK(run.final_state.t == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(run.report.records.back().t == run.final_state.t);
  CHECK(snaps >= static_cast<int>(run.report.records.size()) / 2);
  CHECK(run.report.events.empty());
  for (std::size_t k = 1; k < run.report.records.size(); ++k)
    CHECK(run.report.records[k].E_g <= run.report.records[k - 1].E_g + 1e-9);
}
