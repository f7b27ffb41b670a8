#pragma once

#include <span>

#include "warpflow/fem.hpp"
#include "warpflow/mesh.hpp"

namespace warpflow {

struct EllipticSolution {
  DiscreteField v;
  double relative_residual = 0.0;
  int iterations = 0;
};

struct EllipticSettings {
  double tolerance = 1e-10;
  /// <= 0 selects default_iteration_cap(interior unknowns).
  int max_iterations = 0;
};

/// Solves -div(beta grad v) = f with v = psi on the boundary, by elimination.
///
/// beta is nodal (triangle value = vertex average). `source` is a nodal f whose
/// P1 interpolant is integrated exactly; empty means f = 0. `initial_guess`, if
/// non-empty, seeds the interior unknowns.
class EllipticSolver {
public:
  explicit EllipticSolver(const DomainMesh& mesh, EllipticSettings settings = {});

  EllipticSolution solve(const DiscreteField& beta, const DiscreteField& psi, std::span<const double> source = {},
                         const DiscreteField* initial_guess = nullptr) const;

  const DomainMesh& mesh() const { return *mesh_; }

private:
  const DomainMesh* mesh_;
  EllipticSettings settings_;
  StiffnessAssembler assembler_;
};

EllipticSolution solve_warped_laplace(const DomainMesh& mesh, const DiscreteField& beta, const DiscreteField& psi,
                                      std::span<const double> source = {});

/// int |grad v|^p over int |grad psi_ext|^p. Defined as 0 when both vanish;
/// throws DegenerateBoundaryData when only the denominator vanishes.
double gradient_norm_probe(const DomainMesh& mesh, const DiscreteField& v, const DiscreteField& psi_ext, double p);

/// int |grad f|^p with per-triangle constant gradients.
double gradient_lp_integral(const DomainMesh& mesh, const DiscreteField& f, double p);

} // namespace warpflow
