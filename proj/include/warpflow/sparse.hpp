#pragma once

#include <span>
#include <vector>

namespace warpflow {

/// Square sparse matrix in compressed-row form.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double entry(int i, int j) const;
  std::vector<double> diagonal() const;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// 50 * sqrt(unknowns), at least 50.
int default_iteration_cap(int unknowns);

/// Jacobi-preconditioned conjugate gradients for A x = rhs with the entries
/// flagged in `fixed` eliminated: on entry x holds the Dirichlet values there
/// (kept unchanged) and the initial guess elsewhere.
///
/// The relative residual is measured against rhs_I - A_IB x_B.
SolveStats solve_dirichlet_pcg(const CsrMatrix& a, std::span<const double> rhs, std::span<const char> fixed,
                               std::span<double> x, double tolerance, int max_iterations);

} // namespace warpflow
