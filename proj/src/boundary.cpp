#include "warpflow/boundary.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "warpflow/fem.hpp"

namespace warpflow {

namespace {

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + item + "'");
    }
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty parameter value");
  return out;
}

VecK equivariant(double h, double angle, int dim) {
  if (dim != 3) throw std::invalid_argument("equivariant presets need a sphere in R^3");
  return VecK{std::sin(h) * std::cos(angle), std::sin(h) * std::sin(angle), std::cos(h)};
}

} // namespace

Preset Preset::parse(const std::string& text) {
  std::stringstream ss(text);
  Preset p;
  if (!(ss >> p.name)) throw std::invalid_argument("empty preset");
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + tok + "'");
    p.params[tok.substr(0, eq)] = parse_numbers(tok.substr(eq + 1));
  }
  return p;
}

double Preset::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second.front();
}

std::vector<double> Preset::get_vector(const std::string& key, std::vector<double> fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string Preset::to_string() const {
  std::ostringstream os;
  os << name;
  for (const auto& [k, vals] : params) {
    os << ' ' << k << '=';
    for (std::size_t i = 0; i < vals.size(); ++i) os << (i ? "," : "") << vals[i];
  }
  return os.str();
}

bool is_known_map_preset(const std::string& name) {
  return name == "constant" || name == "sine_bump" || name == "geodesic" || name == "inv_stereographic" ||
         name == "corotational";
}

bool is_known_scalar_preset(const std::string& name) {
  return name == "constant" || name == "linear" || name == "saddle";
}

VecK evaluate_map_preset(const Preset& preset, const Point2& x, int dim) {
  constexpr double pi = std::numbers::pi;
  if (preset.name == "constant") {
    std::vector<double> p = preset.get_vector("p", {});
    if (static_cast<int>(p.size()) != dim) throw std::invalid_argument("constant preset needs p with K entries");
    VecK out(dim);
    for (int i = 0; i < dim; ++i) out[i] = p[i];
    return out;
  }
  if (preset.name == "sine_bump") {
    const int axis = static_cast<int>(preset.get("axis", 0));
    if (axis < 0 || axis >= dim) throw std::invalid_argument("sine_bump axis out of range");
    VecK out(dim);
    out[axis] = preset.get("amp", 0.1) * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    return out;
  }
  if (preset.name == "geodesic") {
    if (dim != 3) throw std::invalid_argument("geodesic preset needs a sphere in R^3");
    const double k = preset.get("k", 1.0);
    const double bump = preset.get("bump", 0.0);
    return VecK{std::cos(k * x[0]), std::sin(k * x[0]), bump * 16.0 * x[0] * (1 - x[0]) * x[1] * (1 - x[1])};
  }
  if (preset.name == "inv_stereographic") {
    const double rho = preset.get("rho", 0.1);
    const std::vector<double> c = preset.get_vector("center", {0.0, 0.0});
    if (c.size() != 2) throw std::invalid_argument("center needs two coordinates");
    const double dx = x[0] - c[0], dy = x[1] - c[1];
    const double d = std::hypot(dx, dy);
    const double h = d == 0.0 ? pi : 2.0 * std::atan(rho * (1.0 - (x[0] * x[0] + x[1] * x[1])) / d);
    return equivariant(h, std::atan2(dy, dx), dim);
  }
  if (preset.name == "corotational") {
    const double r = std::hypot(x[0], x[1]);
    const double h = preset.get("a", 1.0) * r + preset.get("b", 0.0) * std::sin(pi * r);
    return equivariant(h, std::atan2(x[1], x[0]), dim);
  }
  throw std::invalid_argument("unknown map preset '" + preset.name + "'");
}

double evaluate_scalar_preset(const Preset& preset, const Point2& x) {
  if (preset.name == "constant") return preset.get("c", 0.0);
  if (preset.name == "linear")
    return preset.get("a", 0.0) * x[0] + preset.get("b", 0.0) * x[1] + preset.get("c", 0.0);
  if (preset.name == "saddle") return preset.get("a", 1.0) * (x[0] * x[0] - x[1] * x[1]);
  throw std::invalid_argument("unknown scalar preset '" + preset.name + "'");
}

BoundaryData make_boundary_data(const DomainMesh& mesh, const TargetManifold& target, const Preset& phi,
                                const Preset& psi, const Preset& phi0) {
  const int nv = mesh.vertex_count();
  const int dim = target.embedding_dim();
  BoundaryData bd;
  bd.phi = DiscreteField(nv, dim, 0.0);
  bd.psi = DiscreteField(nv, 1, 0.0);
  bd.phi0 = DiscreteField(nv, dim, 0.0);
  for (int v = 0; v < nv; ++v) {
    const Point2& x = mesh.vertices()[v];
    VecK u0 = target.retract(evaluate_map_preset(phi0, x, dim));
    if (mesh.is_boundary(v)) {
      const VecK b = target.retract(evaluate_map_preset(phi, x, dim));
      if (norm(b - u0) > 1e-6)
        throw std::invalid_argument("initial map disagrees with the boundary map at vertex " + std::to_string(v));
      bd.phi.set_point(v, b);
      bd.psi.at(v, 0) = evaluate_scalar_preset(psi, x);
      u0 = b;
    }
    bd.phi0.set_point(v, u0);
  }
  // Interior entries of the traces are irrelevant; seed them with phi0 so the
  // extension solve starts from a sensible guess.
  for (int v : mesh.interior_vertices()) bd.phi.set_point(v, bd.phi0.point(v));
  bd.phi_ext = harmonic_extension(mesh, bd.phi);
  bd.psi_ext = harmonic_extension(mesh, bd.psi);
  return bd;
}

double interior_bump(const Shape& shape, const Point2& x) {
  switch (shape.kind) {
  case ShapeKind::UnitSquare: return 16.0 * x[0] * (1 - x[0]) * x[1] * (1 - x[1]);
  case ShapeKind::UnitDisk: return std::max(0.0, 1.0 - x[0] * x[0] - x[1] * x[1]);
  case ShapeKind::Annulus: {
    const double r = std::hypot(x[0], x[1]);
    const double w = shape.r_out - shape.r_in;
    return std::max(0.0, 4.0 * (r - shape.r_in) * (shape.r_out - r) / (w * w));
  }
  }
  return 0.0;
}

DiscreteField perturb_tangentially(const DomainMesh& mesh, const TargetManifold& target, const DiscreteField& phi0,
                                   double delta, std::uint64_t seed) {
  const int dim = target.embedding_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VecK e(dim);
  for (int i = 0; i < dim; ++i) e[i] = normal(rng);
  e = (1.0 / norm(e)) * e;

  DiscreteField out = phi0;
  if (delta == 0.0) return out;
  for (int v : mesh.interior_vertices()) {
    const VecK y = phi0.point(v);
    const double b = interior_bump(mesh.shape(), mesh.vertices()[v]);
    out.set_point(v, target.retract(y + (delta * b) * target.tangent_project(y, e)));
  }
  return out;
}

} // namespace warpflow
