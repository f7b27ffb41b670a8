#pragma once

// Closed-form reference integrals used as oracles.

#include <cmath>
#include <numbers>

namespace oracle {

// 1/2 int_disk |grad(x^2 - y^2)|^2 = int_disk 2 r^2 dA = pi.
inline double saddle_energy_on_disk() { return std::numbers::pi; }

// First sine mode on the unit square: u = a sin(pi x) sin(pi y).
// ||u||_2 = a/2, E(u) = a^2 pi^2 / 4, both decay under the heat flow with
// rates 2 pi^2 and 4 pi^2.
inline double sine_mode_l2(double a) { return 0.5 * a; }
inline double sine_mode_energy(double a) { return 0.25 * a * a * std::numbers::pi * std::numbers::pi; }
inline double sine_mode_decay_rate() { return 2.0 * std::numbers::pi * std::numbers::pi; }

// Energy of an equivariant map (sin h cos t, sin h sin t, cos h) on the unit
// disk: pi int_0^1 (h'^2 + sin^2 h / r^2) r dr, by composite Simpson.
template <class H, class DH>
double equivariant_energy(H h, DH dh, int n = 20000) {
  auto integrand = [&](double r) {
    if (r == 0.0) {
      // sin h / r -> h'(0) when h(0) = 0
      const double d = dh(0.0);
      return 0.0 * d;
    }
    const double s = std::sin(h(r));
    return (dh(r) * dh(r) + s * s / (r * r)) * r;
  };
  const double step = 1.0 / n;
  double acc = integrand(0.0) + integrand(1.0);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(i * step);
  return std::numbers::pi * acc * step / 3.0;
}

} // namespace oracle
