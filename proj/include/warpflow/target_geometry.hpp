#pragma once

#include <array>
#include <cmath>
#include <string>

namespace warpflow {

inline constexpr int kMaxEmbeddingDim = 4;

/// Small fixed-capacity vector in R^K, K <= kMaxEmbeddingDim.
struct VecK {
  int dim = 0;
  std::array<double, kMaxEmbeddingDim> c{};

  VecK() = default;
  explicit VecK(int d) : dim(d) {}
  VecK(std::initializer_list<double> values) : dim(static_cast<int>(values.size())) {
    int i = 0;
    for (double v : values) c[i++] = v;
  }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
};

inline double dot(const VecK& a, const VecK& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const VecK& a) { return std::sqrt(dot(a, a)); }
inline VecK operator+(VecK a, const VecK& b) {
  for (int i = 0; i < a.dim; ++i) a[i] += b[i];
  return a;
}
inline VecK operator-(VecK a, const VecK& b) {
  for (int i = 0; i < a.dim; ++i) a[i] -= b[i];
  return a;
}
inline VecK operator*(double s, VecK a) {
  for (int i = 0; i < a.dim; ++i) a[i] *= s;
  return a;
}

enum class TargetKind { UnitSphere, FlatTorus };

/// Embedded compact target N in R^K.
///
/// UnitSphere is S^{K-1} in R^K. FlatTorus is R^2 modulo the unit lattice; its
/// points are handled as lifts in R^2 by the flow (the covering map is a local
/// isometry, so the second fundamental form vanishes) and `project` returns the
/// canonical representative in [0,1)^2.
class TargetManifold {
public:
  static TargetManifold unit_sphere(int embedding_dim = 3, double tolerance = 1e-12);
  static TargetManifold flat_torus(double tolerance = 1e-12);

  TargetKind kind() const { return kind_; }
  int embedding_dim() const { return dim_; }
  double projection_tolerance() const { return tolerance_; }
  std::string name() const;

  /// Nearest-point projection onto N. Throws DegeneratePoint at the sphere center.
  VecK project(const VecK& p) const;

  /// Projection used inside the flow. Equal to `project` for the sphere; the
  /// identity on torus lifts, which keeps nodal values continuous.
  VecK retract(const VecK& p) const;

  /// Tangent projector P(y) applied to x.
  VecK tangent_project(const VecK& y, const VecK& x) const;

  /// A(y)(X, X) with X first projected to T_yN. For the unit sphere this is |X|^2 y.
  VecK second_fundamental_form(const VecK& y, const VecK& x) const;

  /// Distance of p from N (zero for any torus lift).
  double distance(const VecK& p) const;

private:
  TargetManifold(TargetKind kind, int dim, double tol) : kind_(kind), dim_(dim), tolerance_(tol) {}

  TargetKind kind_;
  int dim_;
  double tolerance_;
};

enum class WarpKind { Constant, LinearHeight, Sine };

/// Warp function beta on N with explicit bounds lambda <= beta <= Lambda.
///
///   Constant:      beta = a
///   LinearHeight:  beta = a + b * y_K        (sphere; |y_K| <= 1)
///   Sine:          beta = a + b * sin(2 pi y_1)
class WarpFunction {
public:
  static WarpFunction constant(double value);
  static WarpFunction linear_height(double a, double b);
  static WarpFunction sine(double a, double b);

  WarpKind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  std::string name() const;

  double operator()(const VecK& y) const;
  VecK gradient(const VecK& y) const;
  /// B = -grad(beta) / 2.
  VecK b_vector(const VecK& y) const;

  double lower_bound() const { return a_ - std::abs(b_); }
  double upper_bound() const { return a_ + std::abs(b_); }

private:
  WarpFunction(WarpKind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  WarpKind kind_;
  double a_;
  double b_;
};

/// Tangential part of B at y scaled by s = |grad v|^2.
VecK warp_force(const TargetManifold& target, const WarpFunction& warp, const VecK& y, double s);

} // namespace warpflow
