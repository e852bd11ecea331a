// Test-only brute-force oracles, kept independent of the library's own
// numerical paths on purpose.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

// Recursive adaptive Simpson quadrature.
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb, double whole,
                          double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double noise = 4e-16 * (std::abs(left) + std::abs(right));
  if (std::abs(delta) <= 15.0 * std::max(tol, noise) || depth <= 0)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// abs_tol is an absolute target; recursion stops early once rounding noise
// dominates the local estimate.
inline double integrate_simpson(const std::function<double(double)>& f, double a,
                                double b, double abs_tol = 1e-12) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 60);
}

// Dominant left eigenvector of a row-stochastic matrix by plain power
// iteration from the uniform vector.
inline Eigen::VectorXd stationary_power_iteration(const Eigen::MatrixXd& k,
                                                  long max_iters = 100000,
                                                  double tol = 1e-16) {
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(k.rows(), 1.0 / k.rows());
  for (long it = 0; it < max_iters; ++it) {
    Eigen::RowVectorXd next = pi * k;
    next /= next.sum();
    const double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (delta < tol) break;
  }
  return pi.transpose();
}

// Bisection on a bracketing interval.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 100) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((flo < 0.0) == (fmid < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles
