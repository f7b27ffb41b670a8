#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "warpflow/target_geometry.hpp"

namespace warpflow {

using Point2 = std::array<double, 2>;
using Tri = std::array<int, 3>;

enum class ShapeKind { UnitDisk, UnitSquare, Annulus };

struct Shape {
  ShapeKind kind = ShapeKind::UnitSquare;
  double r_in = 0.0;
  double r_out = 1.0;

  static Shape unit_disk() { return {ShapeKind::UnitDisk, 0.0, 1.0}; }
  static Shape unit_square() { return {ShapeKind::UnitSquare, 0.0, 1.0}; }
  static Shape annulus(double r_in, double r_out) { return {ShapeKind::Annulus, r_in, r_out}; }

  std::string name() const;
};

/// Conforming P1 triangulation of a flat planar domain.
///
/// Geometry (areas, barycentric gradients, lumped masses, vertex-to-triangle
/// adjacency) is computed once at construction; the mesh is immutable after that.
class DomainMesh {
public:
  DomainMesh(std::vector<Point2> vertices, std::vector<Tri> triangles, std::vector<char> boundary,
             Shape shape, double target_h);

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Tri>& triangles() const { return triangles_; }
  const std::vector<char>& boundary_flags() const { return boundary_; }
  bool is_boundary(int v) const { return boundary_[v] != 0; }
  const std::vector<int>& boundary_vertices() const { return boundary_list_; }
  const std::vector<int>& interior_vertices() const { return interior_list_; }

  const Shape& shape() const { return shape_; }
  /// Requested resolution; time steps and displacement limits scale with it.
  double target_h() const { return target_h_; }
  /// Longest edge of the triangulation.
  double max_edge() const { return max_edge_; }
  double total_area() const { return total_area_; }
  double diameter() const;

  double area(int t) const { return area_[t]; }
  /// Gradients of the three barycentric basis functions on triangle t.
  const std::array<Point2, 3>& basis_gradients(int t) const { return grad_[t]; }
  Point2 barycenter(int t) const;
  double lumped_mass(int v) const { return lumped_[v]; }
  const std::vector<double>& lumped_masses() const { return lumped_; }

  /// Triangles incident to vertex v.
  std::span<const int> vertex_triangles(int v) const {
    return {vt_index_.data() + vt_offset_[v], vt_index_.data() + vt_offset_[v + 1]};
  }

  int nearest_vertex(const Point2& p) const;

private:
  std::vector<Point2> vertices_;
  std::vector<Tri> triangles_;
  std::vector<char> boundary_;
  std::vector<int> boundary_list_;
  std::vector<int> interior_list_;
  Shape shape_;
  double target_h_;
  double max_edge_ = 0.0;
  double total_area_ = 0.0;
  std::vector<double> area_;
  std::vector<std::array<Point2, 3>> grad_;
  std::vector<double> lumped_;
  std::vector<int> vt_offset_;
  std::vector<int> vt_index_;
};

/// Builds a quasi-uniform mesh. The per-direction cell count is the smallest
/// power of two with cell size <= target_h, so halving target_h doubles it.
DomainMesh build_mesh(const Shape& shape, double target_h);

/// Nodal field with `dim` components per vertex, stored vertex-major.
struct DiscreteField {
  int dim = 1;
  std::vector<double> values;

  DiscreteField() = default;
  DiscreteField(int vertex_count, int components, double fill = 0.0)
      : dim(components), values(static_cast<std::size_t>(vertex_count) * components, fill) {}

  int vertex_count() const { return dim == 0 ? 0 : static_cast<int>(values.size()) / dim; }
  double& at(int v, int c) { return values[static_cast<std::size_t>(v) * dim + c]; }
  double at(int v, int c) const { return values[static_cast<std::size_t>(v) * dim + c]; }
  VecK point(int v) const {
    VecK p(dim);
    for (int c = 0; c < dim; ++c) p[c] = at(v, c);
    return p;
  }
  void set_point(int v, const VecK& p) {
    for (int c = 0; c < dim; ++c) at(v, c) = p[c];
  }
};

/// Per-triangle constant gradient of component `c` of a P1 field.
Point2 triangle_gradient(const DomainMesh& mesh, const DiscreteField& f, int t, int c);

/// |grad f|^2 summed over components, per triangle.
std::vector<double> gradient_sq_per_triangle(const DomainMesh& mesh, const DiscreteField& f);

/// 1/2 * area * |grad f|^2 per triangle.
std::vector<double> energy_density(const DomainMesh& mesh, const DiscreteField& f);

/// Geodesic balls B_r(x0) in the flat domain, resolved to triangles by barycenter.
///
/// Member sets for the radii of one center are prefixes of a single
/// distance-sorted list, hence nested in r.
class BallIndex {
public:
  BallIndex(const DomainMesh& mesh, std::vector<int> centers, std::vector<double> radii);

  const std::vector<int>& centers() const { return centers_; }
  const std::vector<double>& radii() const { return radii_; }
  std::span<const int> members(int center_index, int radius_index) const;

  /// Sum of a per-triangle density over the ball.
  double sum(std::span<const double> density, int center_index, int radius_index) const;

private:
  std::vector<int> centers_;
  std::vector<double> radii_;
  std::vector<std::size_t> offsets_;
  std::vector<int> sorted_;
  std::vector<int> counts_; // centers x radii
};

/// Centers for ball sampling: every vertex when spacing <= 0, otherwise the
/// vertices nearest to a square lattice of the given spacing (deduplicated).
std::vector<int> lattice_centers(const DomainMesh& mesh, double spacing, bool interior_only);

} // namespace warpflow
