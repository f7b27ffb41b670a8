#include "warpflow/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "warpflow/errors.hpp"

namespace warpflow {

StiffnessAssembler::StiffnessAssembler(const DomainMesh& mesh) : mesh_(&mesh) {
  const int nv = mesh.vertex_count();
  const int nt = mesh.triangle_count();
  std::vector<std::vector<int>> rows(nv);
  for (const auto& tri : mesh.triangles())
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rows[tri[a]].push_back(tri[b]);
  pattern_.n = nv;
  pattern_.row_ptr.assign(nv + 1, 0);
  for (int i = 0; i < nv; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    pattern_.row_ptr[i + 1] = pattern_.row_ptr[i] + static_cast<int>(r.size());
    pattern_.col.insert(pattern_.col.end(), r.begin(), r.end());
  }
  pattern_.val.assign(pattern_.col.size(), 0.0);

  scatter_.resize(static_cast<std::size_t>(nt) * 9);
  local_.resize(static_cast<std::size_t>(nt) * 9);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.basis_gradients(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int i = tri[a];
        const auto begin = pattern_.col.begin() + pattern_.row_ptr[i];
        const auto end = pattern_.col.begin() + pattern_.row_ptr[i + 1];
        const int k = static_cast<int>(std::lower_bound(begin, end, tri[b]) - pattern_.col.begin());
        scatter_[t * 9 + a * 3 + b] = k;
        local_[t * 9 + a * 3 + b] = mesh.area(t) * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
      }
  }
}

CsrMatrix StiffnessAssembler::assemble(std::span<const double> coeff) const {
  CsrMatrix m = pattern_;
  const int nt = mesh_->triangle_count();
  for (int t = 0; t < nt; ++t)
    for (int e = 0; e < 9; ++e) m.val[scatter_[t * 9 + e]] += coeff[t] * local_[t * 9 + e];
  return m;
}

CsrMatrix StiffnessAssembler::assemble_weighted(const DiscreteField& beta) const {
  for (int v = 0; v < mesh_->vertex_count(); ++v)
    if (!(beta.at(v, 0) > 0.0))
      throw NonPositiveCoefficient("warp coefficient must be positive (vertex " + std::to_string(v) + ")");
  return assemble(triangle_average(*mesh_, beta));
}

CsrMatrix StiffnessAssembler::assemble_laplacian() const {
  return assemble(std::vector<double>(mesh_->triangle_count(), 1.0));
}

CsrMatrix assemble_weighted_stiffness(const DomainMesh& mesh, const DiscreteField& beta) {
  return StiffnessAssembler(mesh).assemble_weighted(beta);
}

std::vector<double> triangle_average(const DomainMesh& mesh, const DiscreteField& scalar) {
  std::vector<double> out(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    out[t] = (scalar.at(tri[0], 0) + scalar.at(tri[1], 0) + scalar.at(tri[2], 0)) / 3.0;
  }
  return out;
}

double dirichlet_energy(const DomainMesh& mesh, const DiscreteField& f) {
  double s = 0.0;
  for (double e : energy_density(mesh, f)) s += e;
  return s;
}

double dirichlet_energy(const DomainMesh& mesh, const DiscreteField& f, const BallIndex& balls, int center_index,
                        int radius_index) {
  const auto density = energy_density(mesh, f);
  return balls.sum(density, center_index, radius_index);
}

double ball_energy(const DomainMesh& mesh, const DiscreteField& f, int x0, double r) {
  const Point2& c = mesh.vertices().at(x0);
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Point2 b = mesh.barycenter(t);
    if (std::hypot(b[0] - c[0], b[1] - c[1]) > r) continue;
    double g2 = 0.0;
    for (int k = 0; k < f.dim; ++k) {
      const Point2 g = triangle_gradient(mesh, f, t, k);
      g2 += g[0] * g[0] + g[1] * g[1];
    }
    s += 0.5 * mesh.area(t) * g2;
  }
  return s;
}

std::vector<double> consistent_mass_apply(const DomainMesh& mesh, std::span<const double> f) {
  std::vector<double> out(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double w = mesh.area(t) / 12.0;
    const double sum = f[tri[0]] + f[tri[1]] + f[tri[2]];
    for (int a = 0; a < 3; ++a) out[tri[a]] += w * (sum + f[tri[a]]);
  }
  return out;
}

DiscreteField harmonic_extension(const DomainMesh& mesh, const DiscreteField& trace) {
  const int nv = mesh.vertex_count();
  const CsrMatrix k = StiffnessAssembler(mesh).assemble_laplacian();
  DiscreteField out(nv, trace.dim, 0.0);
  std::vector<double> x(nv), rhs(nv, 0.0);
  const auto& fixed = mesh.boundary_flags();
  for (int c = 0; c < trace.dim; ++c) {
    // Initial guess: mean of the boundary values.
    double mean = 0.0;
    for (int v : mesh.boundary_vertices()) mean += trace.at(v, c);
    if (!mesh.boundary_vertices().empty()) mean /= static_cast<double>(mesh.boundary_vertices().size());
    for (int v = 0; v < nv; ++v) x[v] = fixed[v] ? trace.at(v, c) : mean;
    const SolveStats st =
        solve_dirichlet_pcg(k, rhs, fixed, x, 1e-10, default_iteration_cap(static_cast<int>(mesh.interior_vertices().size())));
    if (!st.converged)
      throw SolverFailure("harmonic extension did not converge (relative residual " +
                          std::to_string(st.relative_residual) + ")");
    for (int v = 0; v < nv; ++v) out.at(v, c) = x[v];
  }
  return out;
}

DiscreteField discrete_laplacian(const DomainMesh& mesh, const CsrMatrix& laplacian, const DiscreteField& f) {
  const int nv = mesh.vertex_count();
  DiscreteField out(nv, f.dim, 0.0);
  std::vector<double> comp(nv), kf(nv);
  for (int c = 0; c < f.dim; ++c) {
    for (int v = 0; v < nv; ++v) comp[v] = f.at(v, c);
    laplacian.multiply(comp, kf);
    for (int v : mesh.interior_vertices()) out.at(v, c) = -kf[v] / mesh.lumped_mass(v);
  }
  return out;
}

double lumped_l2_norm(const DomainMesh& mesh, const DiscreteField& f) {
  double s = 0.0;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double p = 0.0;
    for (int c = 0; c < f.dim; ++c) p += f.at(v, c) * f.at(v, c);
    s += mesh.lumped_mass(v) * p;
  }
  return std::sqrt(s);
}

} // namespace warpflow
