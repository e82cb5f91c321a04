#pragma once

#include <cmath>
#include <vector>

namespace lagflow {
namespace quad {

// Adaptive Simpson with Richardson correction.  Plenty for the smooth,
// possibly kinked (at support edges) profile densities we integrate.
namespace detail {

template <class F>
double simpson_rec(const F &f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

template <class F>
double integrate(const F &f, double a, double b, double tol = 1e-12, int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integral over [a, b] split at interior breakpoints (support edges, kinks).
template <class F>
double integrate_piecewise(const F &f, const std::vector<double> &pts, double tol = 1e-12) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    s += integrate(f, pts[i], pts[i + 1], tol);
  return s;
}

} // namespace quad
} // namespace lagflow
