#pragma once

// Shared oracles for the test suite.  The quadrature here is deliberately
// *not* the library's adaptive Simpson: composite Gauss-Legendre with nodes
// computed by Newton on the Legendre recurrence, so reference values are
// obtained by an independent route.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

struct GaussLegendre {
  std::vector<double> x, w; // nodes/weights on [-1, 1]

  explicit GaussLegendre(int n) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / (n + 0.5)); // Chebyshev start
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      x[i] = t;
      w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

// composite 16-point Gauss-Legendre
inline double integrate(const std::function<double(double)> &f, double a, double b,
                        int n_sub = 64) {
  static const GaussLegendre gl(16);
  double s = 0.0;
  const double h = (b - a) / n_sub;
  for (int k = 0; k < n_sub; ++k) {
    const double lo = a + k * h;
    for (std::size_t i = 0; i < gl.x.size(); ++i)
      s += 0.5 * h * gl.w[i] * f(lo + 0.5 * h * (gl.x[i] + 1.0));
  }
  return s;
}

inline double integrate2(const std::function<double(double, double)> &f, double ax, double bx,
                         double ay, double by, int n_sub = 32) {
  return integrate(
      [&](double x) {
        return integrate([&](double y) { return f(x, y); }, ay, by, n_sub);
      },
      ax, bx, n_sub);
}

// central differences, step scaled to the argument
inline double diff(const std::function<double(double)> &f, double x, double h = 1e-6) {
  const double s = h * std::max(1.0, std::abs(x));
  return (f(x + s) - f(x - s)) / (2.0 * s);
}

inline double diff2(const std::function<double(double)> &f, double x, double h = 1e-5) {
  const double s = h * std::max(1.0, std::abs(x));
  return (f(x + s) - 2.0 * f(x) + f(x - s)) / (s * s);
}

inline std::mt19937 &rng() {
  static std::mt19937 gen(20240811u);
  return gen;
}

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

} // namespace oracle
