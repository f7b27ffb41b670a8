#pragma once

// Reduced equation for corotational maps into S^2 on the unit disk,
//
//   h_t = h_rr + h_r / r - sin(2h) / (2 r^2),   h(0) = 0,  h(1) = h_b,
//
// by finite differences on a uniform radial grid. Linearly implicit Euler: the
// diffusion is implicit and the reaction is written as c(h) h / r^2 with
// c(h) = sin(2h) / (2h) frozen at the old level, so every step is one
// tridiagonal solve.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

class RadialFlow {
public:
  RadialFlow(int cells, std::function<double(double)> h0) : n_(cells), dr_(1.0 / cells), h_(cells + 1) {
    for (int i = 0; i <= n_; ++i) h_[i] = h0(i * dr_);
    h_[0] = 0.0;
  }

  double time() const { return t_; }

  // Advances to exactly t_end with steps of at most dt.
  void advance_to(double t_end, double dt) {
    while (t_ < t_end - 1e-15) {
      const double k = std::min(dt, t_end - t_);
      step(k);
      t_ += k;
    }
  }

  // Piecewise-linear profile.
  double operator()(double r) const {
    const double s = std::clamp(r, 0.0, 1.0) / dr_;
    const int i = std::min(static_cast<int>(s), n_ - 1);
    const double w = s - i;
    return (1.0 - w) * h_[i] + w * h_[i + 1];
  }

private:
  void step(double dt) {
    const int m = n_ - 1;  // unknowns 1..n-1
    std::vector<double> a(m), b(m), c(m), d(m);
    const double inv2 = 1.0 / (dr_ * dr_);
    for (int k = 0; k < m; ++k) {
      const int i = k + 1;
      const double r = i * dr_;
      const double hv = h_[i];
      const double react = std::abs(hv) < 1e-8 ? 1.0 - 2.0 * hv * hv / 3.0 : std::sin(2.0 * hv) / (2.0 * hv);
      const double adv = 1.0 / (2.0 * r * dr_);
      a[k] = -dt * (inv2 - adv);
      c[k] = -dt * (inv2 + adv);
      b[k] = 1.0 + dt * (2.0 * inv2 + react / (r * r));
      d[k] = hv;
    }
    // h_0 = 0 contributes nothing; move the outer boundary value to the right side.
    d[m - 1] -= c[m - 1] * h_[n_];
    for (int k = 1; k < m; ++k) {
      const double w = a[k] / b[k - 1];
      b[k] -= w * c[k - 1];
      d[k] -= w * d[k - 1];
    }
    h_[m] = d[m - 1] / b[m - 1];
    for (int k = m - 2; k >= 0; --k) h_[k + 1] = (d[k] - c[k] * h_[k + 2]) / b[k];
  }

  int n_;
  double dr_;
  double t_ = 0.0;
  std::vector<double> h_;
};

} // namespace oracle
