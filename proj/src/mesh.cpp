#include "warpflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace {

int power_of_two_at_least(double x) {
  int n = 1;
  while (n < x - 1e-9) n *= 2;
  return n;
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Triangulates the band between two concentric rings whose nodes start at angle 0
// and are evenly spaced. Always advances the ring whose next node has the smaller angle.
void zip_rings(const std::vector<int>& inner, const std::vector<int>& outer, std::vector<Tri>& out) {
  const long long m1 = static_cast<long long>(inner.size());
  const long long m2 = static_cast<long long>(outer.size());
  long long i = 0;
  long long j = 0;
  while (i < m1 || j < m2) {
    const bool advance_inner = j == m2 || (i < m1 && (i + 1) * m2 <= (j + 1) * m1);
    const int a = inner[i % m1];
    const int b = outer[j % m2];
    if (advance_inner) {
      out.push_back({a, b, inner[(i + 1) % m1]});
      ++i;
    } else {
      out.push_back({a, b, outer[(j + 1) % m2]});
      ++j;
    }
  }
}

std::vector<int> add_ring(std::vector<Point2>& verts, std::vector<char>& bnd, double radius, int count,
                          bool boundary) {
  std::vector<int> ids(count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * i / count;
    ids[i] = static_cast<int>(verts.size());
    verts.push_back({radius * std::cos(a), radius * std::sin(a)});
    bnd.push_back(boundary ? 1 : 0);
  }
  return ids;
}

} // namespace

std::string Shape::name() const {
  switch (kind) {
  case ShapeKind::UnitDisk: return "disk";
  case ShapeKind::UnitSquare: return "square";
  case ShapeKind::Annulus: return "annulus";
  }
  return "unknown";
}

DomainMesh::DomainMesh(std::vector<Point2> vertices, std::vector<Tri> triangles, std::vector<char> boundary,
                       Shape shape, double target_h)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)),
      shape_(shape), target_h_(target_h) {
  if (boundary_.size() != vertices_.size())
    throw std::invalid_argument("boundary flag count must equal vertex count");
  const int nv = vertex_count();
  const int nt = triangle_count();
  area_.resize(nt);
  grad_.resize(nt);
  lumped_.assign(nv, 0.0);
  std::vector<int> degree(nv, 0);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    const Point2& p0 = vertices_[tri[0]];
    const Point2& p1 = vertices_[tri[1]];
    const Point2& p2 = vertices_[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if (!(det > 0.0)) throw std::invalid_argument("triangle " + std::to_string(t) + " has non-positive area");
    area_[t] = 0.5 * det;
    total_area_ += area_[t];
    const std::array<const Point2*, 3> p{&p0, &p1, &p2};
    for (int a = 0; a < 3; ++a) {
      const Point2& q1 = *p[(a + 1) % 3];
      const Point2& q2 = *p[(a + 2) % 3];
      grad_[t][a] = {-(q2[1] - q1[1]) / det, (q2[0] - q1[0]) / det};
      max_edge_ = std::max(max_edge_, dist(q1, q2));
      lumped_[tri[a]] += area_[t] / 3.0;
      ++degree[tri[a]];
    }
  }
  vt_offset_.assign(nv + 1, 0);
  for (int v = 0; v < nv; ++v) vt_offset_[v + 1] = vt_offset_[v] + degree[v];
  vt_index_.resize(vt_offset_[nv]);
  std::vector<int> fill(vt_offset_.begin(), vt_offset_.end() - 1);
  for (int t = 0; t < nt; ++t)
    for (int a = 0; a < 3; ++a) vt_index_[fill[triangles_[t][a]]++] = t;
  for (int v = 0; v < nv; ++v) (boundary_[v] ? boundary_list_ : interior_list_).push_back(v);
}

double DomainMesh::diameter() const {
  switch (shape_.kind) {
  case ShapeKind::UnitSquare: return std::numbers::sqrt2;
  case ShapeKind::UnitDisk: return 2.0;
  case ShapeKind::Annulus: return 2.0 * shape_.r_out;
  }
  return 2.0;
}

Point2 DomainMesh::barycenter(int t) const {
  const auto& tri = triangles_[t];
  return {(vertices_[tri[0]][0] + vertices_[tri[1]][0] + vertices_[tri[2]][0]) / 3.0,
          (vertices_[tri[0]][1] + vertices_[tri[1]][1] + vertices_[tri[2]][1]) / 3.0};
}

int DomainMesh::nearest_vertex(const Point2& p) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < vertex_count(); ++v) {
    const double d = dist(vertices_[v], p);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

DomainMesh build_mesh(const Shape& shape, double target_h) {
  if (!(target_h > 0.0)) throw InvalidShapeParameters("target_h must be positive");
  std::vector<Point2> verts;
  std::vector<Tri> tris;
  std::vector<char> bnd;

  switch (shape.kind) {
  case ShapeKind::UnitSquare: {
    const int n = power_of_two_at_least(1.0 / target_h);
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        bnd.push_back(i == 0 || j == 0 || i == n || j == n ? 1 : 0);
      }
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    break;
  }
  case ShapeKind::UnitDisk: {
    const int n = power_of_two_at_least(1.0 / target_h);
    verts.push_back({0.0, 0.0});
    bnd.push_back(0);
    std::vector<int> prev = add_ring(verts, bnd, 1.0 / n, 6, n == 1);
    for (int a = 0; a < 6; ++a) tris.push_back({0, prev[a], prev[(a + 1) % 6]});
    for (int k = 1; k < n; ++k) {
      std::vector<int> next = add_ring(verts, bnd, static_cast<double>(k + 1) / n, 6 * (k + 1), k + 1 == n);
      zip_rings(prev, next, tris);
      prev = std::move(next);
    }
    break;
  }
  case ShapeKind::Annulus: {
    if (!(shape.r_in > 0.0) || !(shape.r_in < shape.r_out))
      throw InvalidShapeParameters("annulus requires 0 < r_in < r_out");
    const double width = shape.r_out - shape.r_in;
    const int m = power_of_two_at_least(width / target_h);
    const double hc = width / m;
    // Same vertex count on every ring, a power of two, so refinement exactly
    // quadruples the triangle count.
    const int n = std::max(8, power_of_two_at_least(2.0 * std::numbers::pi * shape.r_out / hc));
    auto ring_count = [&](double) { return n; };
    std::vector<int> prev = add_ring(verts, bnd, shape.r_in, ring_count(shape.r_in), true);
    for (int k = 1; k <= m; ++k) {
      const double r = shape.r_in + k * hc;
      std::vector<int> next = add_ring(verts, bnd, r, ring_count(r), k == m);
      zip_rings(prev, next, tris);
      prev = std::move(next);
    }
    break;
  }
  }
  return DomainMesh(std::move(verts), std::move(tris), std::move(bnd), shape, target_h);
}

Point2 triangle_gradient(const DomainMesh& mesh, const DiscreteField& f, int t, int c) {
  const auto& tri = mesh.triangles()[t];
  const auto& g = mesh.basis_gradients(t);
  Point2 out{0.0, 0.0};
  for (int a = 0; a < 3; ++a) {
    const double val = f.at(tri[a], c);
    out[0] += val * g[a][0];
    out[1] += val * g[a][1];
  }
  return out;
}

std::vector<double> gradient_sq_per_triangle(const DomainMesh& mesh, const DiscreteField& f) {
  std::vector<double> out(mesh.triangle_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    double s = 0.0;
    for (int c = 0; c < f.dim; ++c) {
      const Point2 g = triangle_gradient(mesh, f, t, c);
      s += g[0] * g[0] + g[1] * g[1];
    }
    out[t] = s;
  }
  return out;
}

std::vector<double> energy_density(const DomainMesh& mesh, const DiscreteField& f) {
  std::vector<double> out = gradient_sq_per_triangle(mesh, f);
  for (int t = 0; t < mesh.triangle_count(); ++t) out[t] *= 0.5 * mesh.area(t);
  return out;
}

BallIndex::BallIndex(const DomainMesh& mesh, std::vector<int> centers, std::vector<double> radii)
    : centers_(std::move(centers)), radii_(std::move(radii)) {
  double r_max = 0.0;
  for (double r : radii_) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radii must be positive");
    r_max = std::max(r_max, r);
  }
  const int nt = mesh.triangle_count();
  std::vector<Point2> bary(nt);
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (int t = 0; t < nt; ++t) {
    bary[t] = mesh.barycenter(t);
    xmin = std::min(xmin, bary[t][0]);
    xmax = std::max(xmax, bary[t][0]);
    ymin = std::min(ymin, bary[t][1]);
    ymax = std::max(ymax, bary[t][1]);
  }
  const double cell = std::max(r_max, 4.0 * mesh.max_edge());
  const int nx = std::max(1, static_cast<int>((xmax - xmin) / cell) + 1);
  const int ny = std::max(1, static_cast<int>((ymax - ymin) / cell) + 1);
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx) * ny);
  auto cell_of = [&](double x, double lo, int n) {
    return std::clamp(static_cast<int>((x - lo) / cell), 0, n - 1);
  };
  for (int t = 0; t < nt; ++t)
    buckets[cell_of(bary[t][1], ymin, ny) * nx + cell_of(bary[t][0], xmin, nx)].push_back(t);

  offsets_.push_back(0);
  counts_.reserve(centers_.size() * radii_.size());
  std::vector<std::pair<double, int>> found;
  for (int c : centers_) {
    const Point2& x0 = mesh.vertices().at(c);
    found.clear();
    const int ix = cell_of(x0[0], xmin, nx), iy = cell_of(x0[1], ymin, ny);
    const int reach = static_cast<int>(std::ceil(r_max / cell));
    for (int by = std::max(0, iy - reach); by <= std::min(ny - 1, iy + reach); ++by)
      for (int bx = std::max(0, ix - reach); bx <= std::min(nx - 1, ix + reach); ++bx)
        for (int t : buckets[by * nx + bx]) {
          const double d = dist(bary[t], x0);
          if (d <= r_max) found.emplace_back(d, t);
        }
    std::sort(found.begin(), found.end());
    for (const auto& [d, t] : found) sorted_.push_back(t);
    for (double r : radii_) {
      const auto it = std::upper_bound(found.begin(), found.end(), std::make_pair(r, nt));
      counts_.push_back(static_cast<int>(it - found.begin()));
    }
    offsets_.push_back(sorted_.size());
  }
}

std::span<const int> BallIndex::members(int center_index, int radius_index) const {
  const std::size_t begin = offsets_[center_index];
  const int count = counts_[static_cast<std::size_t>(center_index) * radii_.size() + radius_index];
  return {sorted_.data() + begin, static_cast<std::size_t>(count)};
}

double BallIndex::sum(std::span<const double> density, int center_index, int radius_index) const {
  double s = 0.0;
  for (int t : members(center_index, radius_index)) s += density[t];
  return s;
}

namespace {

// Uniform bucket grid over the vertices for nearest-vertex queries.
class VertexGrid {
public:
  VertexGrid(const DomainMesh& mesh, double cell) : mesh_(mesh), cell_(cell) {
    lo_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point2 hi{-lo_[0], -lo_[1]};
    for (const Point2& p : mesh.vertices())
      for (int k = 0; k < 2; ++k) {
        lo_[k] = std::min(lo_[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    nx_ = static_cast<int>((hi[0] - lo_[0]) / cell_) + 1;
    ny_ = static_cast<int>((hi[1] - lo_[1]) / cell_) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int v = 0; v < mesh.vertex_count(); ++v) buckets_[index(mesh.vertices()[v])].push_back(v);
  }

  int nearest(const Point2& p) const {
    const int ix = std::clamp(static_cast<int>((p[0] - lo_[0]) / cell_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((p[1] - lo_[1]) / cell_), 0, ny_ - 1);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= std::max(nx_, ny_); ++ring) {
      // Every vertex outside the current ring is at least (ring - 1) * cell away.
      if (best >= 0 && (ring - 1) * cell_ > best_d) break;
      for (int by = iy - ring; by <= iy + ring; ++by)
        for (int bx = ix - ring; bx <= ix + ring; ++bx) {
          if (std::max(std::abs(bx - ix), std::abs(by - iy)) != ring) continue;
          if (bx < 0 || by < 0 || bx >= nx_ || by >= ny_) continue;
          for (int v : buckets_[static_cast<std::size_t>(by) * nx_ + bx]) {
            const double d = dist(mesh_.vertices()[v], p);
            if (d < best_d || (d == best_d && v < best)) {
              best_d = d;
              best = v;
            }
          }
        }
    }
    return best;
  }

private:
  std::size_t index(const Point2& p) const {
    const int ix = std::clamp(static_cast<int>((p[0] - lo_[0]) / cell_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((p[1] - lo_[1]) / cell_), 0, ny_ - 1);
    return static_cast<std::size_t>(iy) * nx_ + ix;
  }

  const DomainMesh& mesh_;
  double cell_;
  Point2 lo_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

} // namespace

std::vector<int> lattice_centers(const DomainMesh& mesh, double spacing, bool interior_only) {
  std::vector<int> out;
  if (spacing <= 0.0) {
    for (int v = 0; v < mesh.vertex_count(); ++v)
      if (!interior_only || !mesh.is_boundary(v)) out.push_back(v);
    return out;
  }
  const double lo = mesh.shape().kind == ShapeKind::UnitSquare ? 0.0 : -mesh.shape().r_out;
  const double hi = mesh.shape().kind == ShapeKind::UnitSquare ? 1.0 : mesh.shape().r_out;
  std::vector<char> taken(mesh.vertex_count(), 0);
  const VertexGrid grid(mesh, std::max(spacing, 2.0 * mesh.max_edge()));
  const int n = static_cast<int>(std::floor((hi - lo) / spacing + 1e-9));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const Point2 p{lo + i * spacing, lo + j * spacing};
      const double r = std::hypot(p[0], p[1]);
      if (mesh.shape().kind != ShapeKind::UnitSquare && (r > mesh.shape().r_out || r < mesh.shape().r_in))
        continue;
      const int v = grid.nearest(p);
      if (interior_only && mesh.is_boundary(v)) continue;
      if (!taken[v]) {
        taken[v] = 1;
        out.push_back(v);
      }
    }
  return out;
}

} // namespace warpflow
