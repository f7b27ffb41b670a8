#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles/mms.hpp"
#include "warpflow/elliptic.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/fem.hpp"

using namespace warpflow;

namespace {

template <class F>
DiscreteField sample(const DomainMesh& m, F f) {
  DiscreteField out(m.vertex_count(), 1);
  for (int v = 0; v < m.vertex_count(); ++v) out.at(v, 0) = f(m.vertices()[v][0], m.vertices()[v][1]);
  return out;
}

double max_diff(const DiscreteField& a, const DiscreteField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

double mms_error(double h) {
  const DomainMesh m = build_mesh(Shape::unit_square(), h);
  const DiscreteField beta = sample(m, oracle::mms_beta);
  const DiscreteField f = sample(m, oracle::mms_source);
  const EllipticSolution s = solve_warped_laplace(m, beta, DiscreteField(m.vertex_count(), 1), f.values);
  DiscreteField err = sample(m, oracle::mms_solution);
  for (int v = 0; v < m.vertex_count(); ++v) err.at(v, 0) -= s.v.at(v, 0);
  return lumped_l2_norm(m, err);
}

} // namespace

TEST_CASE("linear data is reproduced exactly") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const DiscreteField x = sample(m, [](double x, double) { return x; });
  const DiscreteField y = sample(m, [](double, double y) { return y; });

  const EllipticSolution a = solve_warped_laplace(m, DiscreteField(m.vertex_count(), 1, 1.0), x);
  CHECK(max_diff(a.v, x) < 1e-9);
  CHECK(a.relative_residual <= 1e-10);

  // div((1 + x) grad y) = 0 and P1 reproduces y
  const DiscreteField beta = sample(m, [](double x, double) { return 1.0 + x; });
  const EllipticSolution b = solve_warped_laplace(m, beta, y);
  CHECK(max_diff(b.v, y) < 1e-9);
}

TEST_CASE("boundary values equal psi exactly") {
  const DomainMesh m = build_mesh(Shape::unit_disk(), 1.0 / 16);
  const DiscreteField psi = sample(m, [](double x, double y) { return std::exp(x) * std::cos(3 * y); });
  const DiscreteField beta = sample(m, [](double x, double y) { return 2.0 + std::sin(x * y); });
  const EllipticSolution s = solve_warped_laplace(m, beta, psi);
  for (int v : m.boundary_vertices()) CHECK(s.v.at(v, 0) == psi.at(v, 0));
}

TEST_CASE("manufactured solution converges at second order in L2") {
  const double e1 = mms_error(1.0 / 8), e2 = mms_error(1.0 / 16), e3 = mms_error(1.0 / 32);
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  CHECK(p1 > 1.8);
  CHECK(p2 > 1.8);
  CHECK(p2 < 2.2);
}

TEST_CASE("gradient seminorm error is first order") {
  double prev = 0.0;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const DomainMesh m = build_mesh(Shape::unit_square(), h);
    const DiscreteField f = sample(m, oracle::mms_source);
    const EllipticSolution s =
        solve_warped_laplace(m, sample(m, oracle::mms_beta), DiscreteField(m.vertex_count(), 1), f.values);
    // |grad(v_h - I_h v*)| is superconvergent on this grid, so compare with the exact gradient at barycenters
    double err2 = 0.0;
    for (int t = 0; t < m.triangle_count(); ++t) {
      const Point2 g = triangle_gradient(m, s.v, t, 0);
      const Point2 c = m.barycenter(t);
      const double pi = std::numbers::pi;
      const double gx = pi * std::cos(pi * c[0]) * std::sin(pi * c[1]);
      const double gy = pi * std::sin(pi * c[0]) * std::cos(pi * c[1]);
      err2 += m.area(t) * ((g[0] - gx) * (g[0] - gx) + (g[1] - gy) * (g[1] - gy));
    }
    const double err = std::sqrt(err2);
    if (prev > 0.0) CHECK(std::log2(prev / err) > 0.9);
    prev = err;
  }
}

TEST_CASE("gradient norm probe") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const DiscreteField psi = sample(m, [](double x, double y) { return x * x - y * y + 0.3 * x * y; });
  const DiscreteField ext = harmonic_extension(m, psi);

  const EllipticSolution flat = solve_warped_laplace(m, DiscreteField(m.vertex_count(), 1, 1.0), psi);
  for (double p : {2.0, 3.0, 4.0, 6.0}) CHECK(gradient_norm_probe(m, flat.v, ext, p) == doctest::Approx(1.0).epsilon(1e-7));

  const DiscreteField c(m.vertex_count(), 1, 0.7);
  const EllipticSolution cs = solve_warped_laplace(m, sample(m, oracle::mms_beta), c);
  CHECK(gradient_norm_probe(m, cs.v, harmonic_extension(m, c), 4.0) == 0.0);

  CHECK_THROWS_AS(gradient_norm_probe(m, ext, harmonic_extension(m, c), 2.0), DegenerateBoundaryData);
  CHECK_THROWS_AS(gradient_norm_probe(m, ext, ext, 1.5), std::invalid_argument);
}

TEST_CASE("probe ratio is stable under refinement") {
  auto ratio = [](double h) {
    const DomainMesh m = build_mesh(Shape::unit_square(), h);
    const DiscreteField psi = sample(m, [](double x, double) { return x; });
    const EllipticSolution s = solve_warped_laplace(m, sample(m, oracle::mms_beta), psi);
    return gradient_norm_probe(m, s.v, harmonic_extension(m, psi), 4.0);
  };
  const double a = ratio(1.0 / 16), b = ratio(1.0 / 32);
  CHECK(a > 0.0);
  CHECK(std::abs(a - b) <= 0.05 * a);
}

TEST_CASE("energy bound, flux identity and beta scale invariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const DomainMesh m = build_mesh(Shape::unit_disk(), 1.0 / 16);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const DiscreteField psi = sample(m, [&](double x, double y) { return a * x + b * std::sin(3 * y) + c * x * y; });
    const double lo = 1.0, hi = 3.0;
    const DiscreteField beta =
        sample(m, [&](double x, double y) { return 2.0 + std::sin(5 * x + a) * std::cos(4 * y + b); });
    const EllipticSolution s = solve_warped_laplace(m, beta, psi);
    const DiscreteField ext = harmonic_extension(m, psi);
    CHECK(dirichlet_energy(m, s.v) <= hi / lo * dirichlet_energy(m, ext) + 1e-12);

    const CsrMatrix k = assemble_weighted_stiffness(m, beta);
    std::vector<double> kv(m.vertex_count());
    k.multiply(s.v.values, kv);
    double flux = 0.0, scale = 0.0;
    for (int v : m.interior_vertices()) {
      flux += kv[v];
      scale += std::abs(kv[v]);
    }
    CHECK(std::abs(flux) < 1e-8 * std::max(1.0, scale));

    DiscreteField scaled = beta;
    for (double& x : scaled.values) x *= 7.5;
    CHECK(max_diff(solve_warped_laplace(m, scaled, psi).v, s.v) < 1e-8);
  }
}

TEST_CASE("flux identity with a source") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const DiscreteField beta = sample(m, oracle::mms_beta);
  const DiscreteField f = sample(m, oracle::mms_source);
  const EllipticSolution s = solve_warped_laplace(m, beta, DiscreteField(m.vertex_count(), 1), f.values);
  const CsrMatrix k = assemble_weighted_stiffness(m, beta);
  std::vector<double> kv(m.vertex_count());
  k.multiply(s.v.values, kv);
  const std::vector<double> load = consistent_mass_apply(m, f.values);
  double sum = 0.0;
  for (int v : m.interior_vertices()) sum += kv[v] - load[v];
  CHECK(std::abs(sum) < 1e-8);
}

TEST_CASE("discrete maximum principle on the square grid") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  for (int trial = 0; trial < 5; ++trial) {
    DiscreteField psi(m.vertex_count(), 1);
    double lo = 1e300, hi = -1e300;
    for (int v : m.boundary_vertices()) {
      psi.at(v, 0) = u(rng);
      lo = std::min(lo, psi.at(v, 0));
      hi = std::max(hi, psi.at(v, 0));
    }
    const EllipticSolution s = solve_warped_laplace(m, sample(m, oracle::mms_beta), psi);
    for (double x : s.v.values) {
      CHECK(x >= lo - 1e-9);
      CHECK(x <= hi + 1e-9);
    }
  }
}

TEST_CASE("elliptic errors") {
  const DomainMesh m = build_mesh(Shape::unit_square(), 1.0 / 16);
  const DiscreteField psi = sample(m, [](double x, double y) { return std::sin(4 * x) * y; });
  DiscreteField beta(m.vertex_count(), 1, 1.0);
  beta.at(m.interior_vertices().front(), 0) = -1.0;
  CHECK_THROWS_AS(solve_warped_laplace(m, beta, psi), NonPositiveCoefficient);

  EllipticSolver capped(m, EllipticSettings{1e-10, 1});
  CHECK_THROWS_AS(capped.solve(DiscreteField(m.vertex_count(), 1, 1.0), psi), SolverFailure);
}
