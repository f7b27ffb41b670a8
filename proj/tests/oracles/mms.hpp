#pragma once

// Manufactured solution for -div(beta grad v) = f on the unit square with
// beta = 1 + x/2 and v* = sin(pi x) sin(pi y), which vanishes on the boundary.

#include <cmath>
#include <numbers>

namespace oracle {

inline double mms_beta(double x, double) { return 1.0 + 0.5 * x; }

inline double mms_solution(double x, double y) {
  return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
}

// div(beta grad v*) = beta * lap v* + beta_x v*_x, lap v* = -2 pi^2 v*.
inline double mms_source(double x, double y) {
  constexpr double pi = std::numbers::pi;
  return (1.0 + 0.5 * x) * 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y) -
         0.5 * pi * std::cos(pi * x) * std::sin(pi * y);
}

} // namespace oracle
