#include "warpflow/elliptic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "warpflow/errors.hpp"

namespace warpflow {

EllipticSolver::EllipticSolver(const DomainMesh& mesh, EllipticSettings settings)
    : mesh_(&mesh), settings_(settings), assembler_(mesh) {}

EllipticSolution EllipticSolver::solve(const DiscreteField& beta, const DiscreteField& psi,
                                       std::span<const double> source, const DiscreteField* initial_guess) const {
  const int nv = mesh_->vertex_count();
  if (beta.vertex_count() != nv || psi.vertex_count() != nv)
    throw std::invalid_argument("elliptic solve: field size does not match mesh");
  const CsrMatrix a = assembler_.assemble_weighted(beta);

  std::vector<double> rhs(nv, 0.0);
  if (!source.empty()) rhs = consistent_mass_apply(*mesh_, source);

  EllipticSolution out;
  out.v = DiscreteField(nv, 1, 0.0);
  const auto& fixed = mesh_->boundary_flags();
  for (int v = 0; v < nv; ++v) {
    if (fixed[v])
      out.v.values[v] = psi.at(v, 0);
    else if (initial_guess != nullptr)
      out.v.values[v] = initial_guess->at(v, 0);
  }
  const int cap = settings_.max_iterations > 0
                      ? settings_.max_iterations
                      : default_iteration_cap(static_cast<int>(mesh_->interior_vertices().size()));
  const SolveStats st = solve_dirichlet_pcg(a, rhs, fixed, out.v.values, settings_.tolerance, cap);
  if (!st.converged)
    throw SolverFailure("warped Laplace solve hit the iteration cap (" + std::to_string(cap) +
                        ", relative residual " + std::to_string(st.relative_residual) + ")");
  out.relative_residual = st.relative_residual;
  out.iterations = st.iterations;
  return out;
}

EllipticSolution solve_warped_laplace(const DomainMesh& mesh, const DiscreteField& beta, const DiscreteField& psi,
                                      std::span<const double> source) {
  return EllipticSolver(mesh).solve(beta, psi, source);
}

double gradient_lp_integral(const DomainMesh& mesh, const DiscreteField& f, double p) {
  const auto g2 = gradient_sq_per_triangle(mesh, f);
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) s += mesh.area(t) * std::pow(g2[t], 0.5 * p);
  return s;
}

double gradient_norm_probe(const DomainMesh& mesh, const DiscreteField& v, const DiscreteField& psi_ext, double p) {
  if (p < 2.0) throw std::invalid_argument("gradient_norm_probe needs p >= 2");
  const double num = gradient_lp_integral(mesh, v, p);
  const double den = gradient_lp_integral(mesh, psi_ext, p);
  const double scale = 1e-28 * mesh.total_area();
  if (den <= scale) {
    if (num <= scale) return 0.0;
    throw DegenerateBoundaryData("boundary data has zero gradient but the solution does not");
  }
  return num / den;
}

} // namespace warpflow
