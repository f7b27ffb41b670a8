#include "warpflow/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace warpflow {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

double CsrMatrix::entry(int i, int j) const {
  const auto begin = col.begin() + row_ptr[i];
  const auto end = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it != end && *it == j) ? val[it - col.begin()] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i) d[i] = entry(i, i);
  return d;
}

int default_iteration_cap(int unknowns) {
  return std::max(50, static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(unknowns)))));
}

namespace {

double masked_dot(std::span<const double> a, std::span<const double> b, std::span<const char> fixed) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!fixed[i]) s += a[i] * b[i];
  return s;
}

} // namespace

SolveStats solve_dirichlet_pcg(const CsrMatrix& a, std::span<const double> rhs, std::span<const char> fixed,
                               std::span<double> x, double tolerance, int max_iterations) {
  const int n = a.n;
  std::vector<double> r(n), z(n), p(n), q(n);

  // b_eff = rhs - A (x restricted to fixed entries)
  for (int i = 0; i < n; ++i) p[i] = fixed[i] ? x[i] : 0.0;
  a.multiply(p, q);
  for (int i = 0; i < n; ++i) r[i] = fixed[i] ? 0.0 : rhs[i] - q[i];
  const double b_norm = std::sqrt(masked_dot(r, r, fixed));

  SolveStats stats;
  if (b_norm == 0.0) {
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) x[i] = 0.0;
    stats.converged = true;
    return stats;
  }

  a.multiply(x, q);
  for (int i = 0; i < n; ++i) r[i] = fixed[i] ? 0.0 : rhs[i] - q[i];
  const std::vector<double> diag = a.diagonal();

  double r_norm = std::sqrt(masked_dot(r, r, fixed));
  stats.relative_residual = r_norm / b_norm;
  if (stats.relative_residual <= tolerance) {
    stats.converged = true;
    return stats;
  }
  for (int i = 0; i < n; ++i) z[i] = fixed[i] ? 0.0 : r[i] / diag[i];
  p = z;
  double rz = masked_dot(r, z, fixed);
  for (int it = 1; it <= max_iterations; ++it) {
    a.multiply(p, q);
    for (int i = 0; i < n; ++i)
      if (fixed[i]) q[i] = 0.0;
    const double alpha = rz / masked_dot(p, q, fixed);
    for (int i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    r_norm = std::sqrt(masked_dot(r, r, fixed));
    stats.iterations = it;
    stats.relative_residual = r_norm / b_norm;
    if (stats.relative_residual <= tolerance) {
      stats.converged = true;
      return stats;
    }
    for (int i = 0; i < n; ++i) z[i] = fixed[i] ? 0.0 : r[i] / diag[i];
    const double rz_new = masked_dot(r, z, fixed);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = fixed[i] ? 0.0 : z[i] + beta * p[i];
  }
  return stats;
}

} // namespace warpflow
