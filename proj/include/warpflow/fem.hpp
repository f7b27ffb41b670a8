#pragma once

#include <span>
#include <vector>

#include "warpflow/mesh.hpp"
#include "warpflow/sparse.hpp"

namespace warpflow {

/// Assembles P1 stiffness matrices sum_t c_t * int_t grad(l_i) . grad(l_j) on a
/// fixed sparsity pattern. Building the pattern is the expensive part; each
/// assembly afterwards is one pass over the triangles.
class StiffnessAssembler {
public:
  explicit StiffnessAssembler(const DomainMesh& mesh);

  /// Per-triangle coefficients.
  CsrMatrix assemble(std::span<const double> triangle_coefficient) const;
  /// Nodal coefficient beta; triangle value is the vertex average.
  /// Throws NonPositiveCoefficient if any nodal value is <= 0.
  CsrMatrix assemble_weighted(const DiscreteField& beta) const;
  CsrMatrix assemble_laplacian() const;

private:
  const DomainMesh* mesh_;
  CsrMatrix pattern_;
  std::vector<int> scatter_;    // 9 per triangle
  std::vector<double> local_;   // 9 per triangle
};

CsrMatrix assemble_weighted_stiffness(const DomainMesh& mesh, const DiscreteField& beta);

/// Triangle averages of a nodal scalar field.
std::vector<double> triangle_average(const DomainMesh& mesh, const DiscreteField& scalar);

/// Full-domain Dirichlet energy 1/2 int |grad f|^2 (all components).
double dirichlet_energy(const DomainMesh& mesh, const DiscreteField& f);
/// Energy restricted to the triangles of one BallIndex entry.
double dirichlet_energy(const DomainMesh& mesh, const DiscreteField& f, const BallIndex& balls, int center_index,
                        int radius_index);
/// E(f; B_r(x0)) with triangle membership by barycenter distance.
double ball_energy(const DomainMesh& mesh, const DiscreteField& f, int x0, double r);

/// Consistent-mass product M f for a nodal scalar (load vector of the P1 interpolant).
std::vector<double> consistent_mass_apply(const DomainMesh& mesh, std::span<const double> f);

/// Discrete harmonic extension of the boundary values of `trace` (all components).
/// Throws SolverFailure if the linear solve does not converge.
DiscreteField harmonic_extension(const DomainMesh& mesh, const DiscreteField& trace);

/// Lumped-mass discrete Laplacian -M_L^{-1} K f per component; zero on boundary vertices.
DiscreteField discrete_laplacian(const DomainMesh& mesh, const CsrMatrix& laplacian, const DiscreteField& f);

/// L2 norm with lumped-mass quadrature, over all vertices.
double lumped_l2_norm(const DomainMesh& mesh, const DiscreteField& f);

} // namespace warpflow
