#pragma once

#include <string>

#include "warpflow/boundary.hpp"
#include "warpflow/elliptic.hpp"
#include "warpflow/fem.hpp"
#include "warpflow/mesh.hpp"
#include "warpflow/target_geometry.hpp"

namespace warpflow {

enum class Scheme { ExplicitProjected, SemiImplicitProjected };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

struct StepperConfig {
  Scheme scheme = Scheme::SemiImplicitProjected;
  double sigma = 0.2;
  /// Implicitness of the Laplacian in the semi-implicit scheme (1 = backward Euler).
  double theta = 0.5;
  /// <= 0 selects 1e-6 h^2.
  double dt_min = 0.0;
  /// Steps moving any node further than this fraction of h are rejected.
  double max_displacement = 0.1;
  EllipticSettings elliptic;

  /// Throws std::invalid_argument unless sigma in (0, 0.5], theta in [0.5, 1],
  /// max_displacement > 0.
  void validate() const;
};

struct FlowState {
  DiscreteField u;
  DiscreteField v;
  double t = 0.0;
  double dt_current = 0.0;
  long step_count = 0;
  /// Stats of the elliptic solve that produced v.
  int v_iterations = 0;
  double v_residual = 0.0;
};

struct TensionResidual {
  DiscreteField field;
  double norm = 0.0;
};

/// Outcome of a single attempt at a fixed dt.
struct StepAttempt {
  FlowState state;
  double displacement = 0.0;
  bool accepted = false;
};

/// Discretization of the coupled flow on one mesh: owns the operators shared
/// by every step. Immutable after construction.
class FlowStepper {
public:
  FlowStepper(const DomainMesh& mesh, TargetManifold target, WarpFunction warp, BoundaryData data,
              StepperConfig config);

  const DomainMesh& mesh() const { return *mesh_; }
  const TargetManifold& target() const { return target_; }
  const WarpFunction& warp() const { return warp_; }
  const BoundaryData& data() const { return data_; }
  const StepperConfig& config() const { return config_; }
  const CsrMatrix& laplacian() const { return laplacian_; }

  double cfl_dt() const;
  double dt_min() const;
  double displacement_limit() const { return config_.max_displacement * mesh_->target_h(); }

  /// u = phi0, v solved for it, dt = cfl_dt().
  FlowState initial_state() const;

  /// Nodal beta(u).
  DiscreteField beta_field(const DiscreteField& u) const;
  EllipticSolution solve_v(const DiscreteField& u, const DiscreteField* guess = nullptr) const;

  /// Nodal lower-order forcing A(u)(grad u, grad u) - B^T(u)|grad v|^2, zero on
  /// the boundary. Triangle quantities are lumped to vertices with weights area/3.
  DiscreteField forcing(const DiscreteField& u, const DiscreteField& v) const;

  TensionResidual tension_residual(const FlowState& state) const;

  /// One attempt at time increment dt; no retry.
  StepAttempt attempt(const FlowState& state, double dt) const;

  /// Advances by one accepted step starting from state.dt_current, halving on
  /// rejection. Throws TimestepUnderflow once dt drops below dt_min().
  FlowState step(const FlowState& state) const;

  /// Unlimited step at dt_min(), used to continue past a detected blow-up.
  FlowState forced_step(const FlowState& state) const;

private:
  FlowState finish(const FlowState& from, DiscreteField u_new, double dt) const;

  const DomainMesh* mesh_;
  TargetManifold target_;
  WarpFunction warp_;
  BoundaryData data_;
  StepperConfig config_;
  CsrMatrix laplacian_;
  EllipticSolver elliptic_;
  std::vector<char> fixed_;
};

} // namespace warpflow
