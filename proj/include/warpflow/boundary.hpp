#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "warpflow/mesh.hpp"
#include "warpflow/target_geometry.hpp"

namespace warpflow {

/// Named analytic preset with numeric parameters, parsed from text such as
/// "inv_stereographic rho=0.1 center=0,0".
struct Preset {
  std::string name;
  std::map<std::string, std::vector<double>> params;

  static Preset parse(const std::string& text);
  double get(const std::string& key, double fallback) const;
  std::vector<double> get_vector(const std::string& key, std::vector<double> fallback) const;
  std::string to_string() const;
};

/// Evaluates a target-valued preset at x (before any projection onto N).
///
///   constant p=...                 fixed point
///   sine_bump amp=A axis=k         A sin(pi x) sin(pi y) e_k (torus lifts)
///   geodesic k=K bump=B            (cos Kx, sin Kx, B*16x(1-x)y(1-y))
///   inv_stereographic rho= center= degree-one bubble of scale rho with
///                                  h(x) = 2 atan(rho (1-|x|^2) / |x-c|), so
///                                  the unit circle maps to the north pole
///   corotational a=A b=B           h(r) = A r + B sin(pi r)
///
/// The last two return (sin h cos t, sin h sin t, cos h), t = angle of x - c.
VecK evaluate_map_preset(const Preset& preset, const Point2& x, int embedding_dim);

/// Scalar presets: constant c=, linear a= b= c= (a x + b y + c), saddle a= (a (x^2 - y^2)).
double evaluate_scalar_preset(const Preset& preset, const Point2& x);

bool is_known_map_preset(const std::string& name);
bool is_known_scalar_preset(const std::string& name);

/// Boundary and initial data for one run. Traces are stored as full-length
/// nodal fields whose boundary entries are authoritative.
struct BoundaryData {
  DiscreteField phi;     ///< boundary map (values on N at boundary vertices)
  DiscreteField psi;     ///< boundary trace for v
  DiscreteField phi0;    ///< initial map on N; equals phi on the boundary exactly
  DiscreteField phi_ext; ///< componentwise harmonic extension of phi
  DiscreteField psi_ext; ///< harmonic extension of psi
};

/// Evaluates presets on the mesh. phi0 is retracted onto N; throws
/// std::invalid_argument if it disagrees with phi on the boundary by more than 1e-6.
BoundaryData make_boundary_data(const DomainMesh& mesh, const TargetManifold& target, const Preset& phi,
                                const Preset& psi, const Preset& phi0);

/// Bump that vanishes on the boundary and peaks at 1 (shape dependent).
double interior_bump(const Shape& shape, const Point2& x);

/// phi0 moved by delta * bump(x) * P(phi0) e and retracted onto N, with a unit
/// direction e drawn from `seed`. Boundary values are unchanged.
DiscreteField perturb_tangentially(const DomainMesh& mesh, const TargetManifold& target, const DiscreteField& phi0,
                                   double delta, std::uint64_t seed);

} // namespace warpflow
