#include "warpflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "warpflow/errors.hpp"

namespace warpflow {

std::string scheme_name(Scheme s) {
  return s == Scheme::ExplicitProjected ? "explicit_projected" : "semi_implicit_projected";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit_projected" || name == "explicit") return Scheme::ExplicitProjected;
  if (name == "semi_implicit_projected" || name == "semi_implicit") return Scheme::SemiImplicitProjected;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

void StepperConfig::validate() const {
  if (!(sigma > 0.0 && sigma <= 0.5)) throw std::invalid_argument("stepper sigma must lie in (0, 0.5]");
  if (!(theta >= 0.5 && theta <= 1.0)) throw std::invalid_argument("stepper theta must lie in [0.5, 1]");
  if (!(max_displacement > 0.0)) throw std::invalid_argument("max displacement fraction must be positive");
  if (std::isnan(dt_min)) throw std::invalid_argument("dt_min is NaN");
}

FlowStepper::FlowStepper(const DomainMesh& mesh, TargetManifold target, WarpFunction warp, BoundaryData data,
                         StepperConfig config)
    : mesh_(&mesh), target_(target), warp_(warp), data_(std::move(data)), config_(config),
      elliptic_(mesh, config.elliptic), fixed_(mesh.boundary_flags()) {
  config_.validate();
  laplacian_ = StiffnessAssembler(mesh).assemble_laplacian();
}

double FlowStepper::cfl_dt() const {
  const double h = mesh_->target_h();
  return config_.scheme == Scheme::ExplicitProjected ? config_.sigma * h * h : config_.sigma * h;
}

double FlowStepper::dt_min() const {
  if (config_.dt_min > 0.0) return config_.dt_min;
  const double h = mesh_->target_h();
  return 1e-6 * h * h;
}

DiscreteField FlowStepper::beta_field(const DiscreteField& u) const {
  DiscreteField b(mesh_->vertex_count(), 1);
  for (int v = 0; v < mesh_->vertex_count(); ++v) b.at(v, 0) = warp_(u.point(v));
  return b;
}

EllipticSolution FlowStepper::solve_v(const DiscreteField& u, const DiscreteField* guess) const {
  return elliptic_.solve(beta_field(u), data_.psi, {}, guess);
}

FlowState FlowStepper::initial_state() const {
  FlowState s;
  s.u = data_.phi0;
  EllipticSolution sol = solve_v(s.u, &data_.psi_ext);
  s.v = std::move(sol.v);
  s.v_iterations = sol.iterations;
  s.v_residual = sol.relative_residual;
  s.dt_current = cfl_dt();
  return s;
}

DiscreteField FlowStepper::forcing(const DiscreteField& u, const DiscreteField& v) const {
  const DomainMesh& m = *mesh_;
  const int dim = u.dim;
  const int nv = m.vertex_count();
  DiscreteField f(nv, dim);
  std::vector<double> s(nv, 0.0);
  const bool warped = warp_.kind() != WarpKind::Constant;
  const bool curved = target_.kind() != TargetKind::FlatTorus;

  for (int t = 0; t < m.triangle_count(); ++t) {
    const Tri& tri = m.triangles()[t];
    const auto& g = m.basis_gradients(t);
    const double w = m.area(t) / 3.0;
    if (curved) {
      VecK gx(dim), gy(dim);
      for (int c = 0; c < dim; ++c) {
        for (int a = 0; a < 3; ++a) {
          gx[c] += u.at(tri[a], c) * g[a][0];
          gy[c] += u.at(tri[a], c) * g[a][1];
        }
      }
      for (int a = 0; a < 3; ++a) {
        const int i = tri[a];
        if (m.is_boundary(i)) continue;
        const VecK y = u.point(i);
        if (target_.kind() == TargetKind::UnitSphere) {
          // A(y)(X,X) = |P(y)X|^2 y, written out to keep this loop cheap.
          const double px = dot(gx, y), py = dot(gy, y);
          const double s2 = dot(gx, gx) - px * px + dot(gy, gy) - py * py;
          for (int c = 0; c < dim; ++c) f.at(i, c) += w * s2 * y[c];
        } else {
          const VecK av = target_.second_fundamental_form(y, gx) + target_.second_fundamental_form(y, gy);
          for (int c = 0; c < dim; ++c) f.at(i, c) += w * av[c];
        }
      }
    }
    if (warped) {
      double vx = 0.0, vy = 0.0;
      for (int a = 0; a < 3; ++a) {
        vx += v.at(tri[a], 0) * g[a][0];
        vy += v.at(tri[a], 0) * g[a][1];
      }
      for (int a = 0; a < 3; ++a) s[tri[a]] += w * (vx * vx + vy * vy);
    }
  }
  for (int i : m.interior_vertices()) {
    const double inv = 1.0 / m.lumped_mass(i);
    VecK fi = f.point(i);
    fi = inv * fi;
    if (warped) fi = fi - warp_force(target_, warp_, u.point(i), s[i] * inv);
    f.set_point(i, fi);
  }
  return f;
}

TensionResidual FlowStepper::tension_residual(const FlowState& state) const {
  const DomainMesh& m = *mesh_;
  TensionResidual r;
  r.field = discrete_laplacian(m, laplacian_, state.u);
  const DiscreteField f = forcing(state.u, state.v);
  double acc = 0.0;
  for (int i : m.interior_vertices()) {
    const VecK y = state.u.point(i);
    const VecK ri = target_.tangent_project(y, r.field.point(i) + f.point(i));
    r.field.set_point(i, ri);
    acc += m.lumped_mass(i) * dot(ri, ri);
  }
  r.norm = std::sqrt(acc);
  return r;
}

StepAttempt FlowStepper::attempt(const FlowState& state, double dt) const {
  const DomainMesh& m = *mesh_;
  const int nv = m.vertex_count();
  const int dim = state.u.dim;
  const DiscreteField f = forcing(state.u, state.v);
  DiscreteField ustar(nv, dim);

  std::vector<double> comp(nv), ku(nv), rhs(nv), x(nv);
  CsrMatrix system;
  const double theta = config_.theta;
  if (config_.scheme == Scheme::SemiImplicitProjected) {
    system = laplacian_;
    for (double& a : system.val) a *= theta * dt;
    for (int i = 0; i < nv; ++i) {
      for (int k = system.row_ptr[i]; k < system.row_ptr[i + 1]; ++k) {
        if (system.col[k] == i) system.val[k] += m.lumped_mass(i);
      }
    }
  }

  for (int c = 0; c < dim; ++c) {
    for (int i = 0; i < nv; ++i) comp[i] = state.u.at(i, c);
    laplacian_.multiply(comp, ku);
    if (config_.scheme == Scheme::ExplicitProjected) {
      for (int i = 0; i < nv; ++i) {
        x[i] = m.is_boundary(i) ? data_.phi.at(i, c)
                                : comp[i] + dt * (f.at(i, c) - ku[i] / m.lumped_mass(i));
      }
    } else {
      for (int i = 0; i < nv; ++i) {
        const double mi = m.lumped_mass(i);
        rhs[i] = mi * comp[i] - (1.0 - theta) * dt * ku[i] + dt * mi * f.at(i, c);
        x[i] = m.is_boundary(i) ? data_.phi.at(i, c) : comp[i];
      }
      const SolveStats st = solve_dirichlet_pcg(system, rhs, fixed_, x, config_.elliptic.tolerance,
                                                config_.elliptic.max_iterations > 0
                                                    ? config_.elliptic.max_iterations
                                                    : default_iteration_cap(static_cast<int>(m.interior_vertices().size())));
      if (!st.converged) {
        std::ostringstream os;
        os << "heat solve did not converge at t=" << state.t << " (residual " << st.relative_residual << ")";
        throw SolverFailure(os.str());
      }
    }
    for (int i = 0; i < nv; ++i) ustar.at(i, c) = x[i];
  }

  StepAttempt out;
  DiscreteField unew(nv, dim);
  try {
    for (int i = 0; i < nv; ++i) {
      const VecK p = m.is_boundary(i) ? data_.phi.point(i) : target_.retract(ustar.point(i));
      unew.set_point(i, p);
      out.displacement = std::max(out.displacement, norm(p - state.u.point(i)));
    }
  } catch (const DegeneratePoint&) {
    out.displacement = std::numeric_limits<double>::infinity();
    return out;
  }
  if (!std::isfinite(out.displacement)) return out;
  out.accepted = out.displacement <= displacement_limit();
  if (out.accepted) out.state = finish(state, std::move(unew), dt);
  else out.state.u = std::move(unew);
  return out;
}

FlowState FlowStepper::finish(const FlowState& from, DiscreteField u_new, double dt) const {
  FlowState s;
  EllipticSolution sol = solve_v(u_new, &from.v);
  s.u = std::move(u_new);
  s.v = std::move(sol.v);
  s.v_iterations = sol.iterations;
  s.v_residual = sol.relative_residual;
  s.t = from.t + dt;
  s.dt_current = dt;
  s.step_count = from.step_count + 1;
  return s;
}

FlowState FlowStepper::step(const FlowState& state) const {
  const double cfl = cfl_dt();
  double dt = state.dt_current > 0.0 ? state.dt_current : cfl;
  for (;;) {
    StepAttempt a = attempt(state, dt);
    if (a.accepted) {
      if (a.displacement <= 0.5 * displacement_limit()) a.state.dt_current = std::min(cfl, 2.0 * dt);
      return std::move(a.state);
    }
    dt *= 0.5;
    if (dt < dt_min()) {
      std::ostringstream os;
      os << "time step underflow at t=" << state.t << " (dt < " << dt_min() << ")";
      throw TimestepUnderflow(os.str(), state.t);
    }
  }
}

FlowState FlowStepper::forced_step(const FlowState& state) const {
  const double dt = dt_min();
  StepAttempt a = attempt(state, dt);
  if (a.accepted) return std::move(a.state);
  if (!std::isfinite(a.displacement)) throw SolverFailure("projection undefined during continuation step");
  FlowState s = finish(state, std::move(a.state.u), dt);
  s.dt_current = cfl_dt();
  return s;
}

} // namespace warpflow
