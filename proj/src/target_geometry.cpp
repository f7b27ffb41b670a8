#include "warpflow/target_geometry.hpp"

#include <numbers>
#include <stdexcept>

#include "warpflow/errors.hpp"

namespace warpflow {

TargetManifold TargetManifold::unit_sphere(int embedding_dim, double tolerance) {
  if (embedding_dim < 2 || embedding_dim > kMaxEmbeddingDim)
    throw std::invalid_argument("unit sphere embedding dimension must be in [2, 4]");
  return TargetManifold(TargetKind::UnitSphere, embedding_dim, tolerance);
}

TargetManifold TargetManifold::flat_torus(double tolerance) {
  return TargetManifold(TargetKind::FlatTorus, 2, tolerance);
}

std::string TargetManifold::name() const {
  return kind_ == TargetKind::UnitSphere ? "sphere" : "torus";
}

VecK TargetManifold::project(const VecK& p) const {
  if (kind_ == TargetKind::UnitSphere) {
    const double r = norm(p);
    if (r < 1e-300) throw DegeneratePoint("nearest-point projection undefined at the sphere center");
    return (1.0 / r) * p;
  }
  VecK q = p;
  for (int i = 0; i < dim_; ++i) {
    q[i] = p[i] - std::floor(p[i]);
    if (q[i] >= 1.0) q[i] = 0.0;
  }
  return q;
}

VecK TargetManifold::retract(const VecK& p) const {
  if (kind_ == TargetKind::UnitSphere) return project(p);
  return p;
}

VecK TargetManifold::tangent_project(const VecK& y, const VecK& x) const {
  if (kind_ == TargetKind::FlatTorus) return x;
  // y is unit: P(y) = I - y y^T
  return x - dot(x, y) * y;
}

VecK TargetManifold::second_fundamental_form(const VecK& y, const VecK& x) const {
  if (kind_ == TargetKind::FlatTorus) return VecK(dim_);
  const VecK xt = tangent_project(y, x);
  return dot(xt, xt) * y;
}

double TargetManifold::distance(const VecK& p) const {
  if (kind_ == TargetKind::UnitSphere) return std::abs(norm(p) - 1.0);
  return 0.0;
}

WarpFunction WarpFunction::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("constant warp must be positive");
  return WarpFunction(WarpKind::Constant, value, 0.0);
}

WarpFunction WarpFunction::linear_height(double a, double b) {
  if (!(a - std::abs(b) > 0.0)) throw std::invalid_argument("linear warp needs a - |b| > 0");
  return WarpFunction(WarpKind::LinearHeight, a, b);
}

WarpFunction WarpFunction::sine(double a, double b) {
  if (!(a - std::abs(b) > 0.0)) throw std::invalid_argument("sine warp needs a - |b| > 0");
  return WarpFunction(WarpKind::Sine, a, b);
}

std::string WarpFunction::name() const {
  switch (kind_) {
  case WarpKind::Constant: return "constant";
  case WarpKind::LinearHeight: return "linear_height";
  case WarpKind::Sine: return "sine";
  }
  return "unknown";
}

double WarpFunction::operator()(const VecK& y) const {
  switch (kind_) {
  case WarpKind::Constant: return a_;
  case WarpKind::LinearHeight: return a_ + b_ * y[y.dim - 1];
  case WarpKind::Sine: return a_ + b_ * std::sin(2.0 * std::numbers::pi * y[0]);
  }
  return a_;
}

VecK WarpFunction::gradient(const VecK& y) const {
  VecK g(y.dim);
  switch (kind_) {
  case WarpKind::Constant: break;
  case WarpKind::LinearHeight: g[y.dim - 1] = b_; break;
  case WarpKind::Sine:
    g[0] = 2.0 * std::numbers::pi * b_ * std::cos(2.0 * std::numbers::pi * y[0]);
    break;
  }
  return g;
}

VecK WarpFunction::b_vector(const VecK& y) const { return -0.5 * gradient(y); }

VecK warp_force(const TargetManifold& target, const WarpFunction& warp, const VecK& y, double s) {
  if (warp.kind() == WarpKind::Constant) return VecK(y.dim);
  return s * target.tangent_project(y, warp.b_vector(y));
}

} // namespace warpflow
