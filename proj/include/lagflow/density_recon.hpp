#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/mesh.hpp"

namespace lagflow {

// Piecewise-constant density carried by the transformed 1d grid: on the image
// cell [phi_c, phi_{c+1}] the density is rho_ref / slope_c (push-forward of
// the uniform reference density under phi).
struct DensityField1D {
  std::vector<double> edges;  // n_cells + 1 image node positions
  std::vector<double> values; // n_cells cell densities
  double mass = 0.0;

  int n_cells() const { return static_cast<int>(values.size()); }
  double midpoint(int c) const { return 0.5 * (edges[c] + edges[c + 1]); }
};

inline DensityField1D reconstruct_1d(const Diffeo1D &phi, double rho_ref = 1.0) {
  DensityField1D out;
  const int n = phi.grid.n_cells;
  out.edges.resize(n + 1);
  out.values.resize(n);
  for (int i = 0; i <= n; ++i) out.edges[i] = phi.phi[i];
  for (int c = 0; c < n; ++c) {
    const double s = phi.slope(c);
    if (!(s > 0.0)) throw DegenerateMapError("reconstruct_1d: non-positive slope in cell " + std::to_string(c));
    out.values[c] = rho_ref / s;
    out.mass += out.values[c] * (out.edges[c + 1] - out.edges[c]);
  }
  return out;
}

// Evaluate the piecewise-constant density at x (0 outside the support).
inline double density_at_1d(const DensityField1D &f, double x) {
  if (x < f.edges.front() || x > f.edges.back()) return 0.0;
  int lo = 0, hi = f.n_cells();
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (f.edges[mid] <= x ? lo : hi) = mid;
  }
  return f.values[lo];
}

struct DensityField2D {
  const TriMesh *mesh = nullptr;   // reference mesh (connectivity)
  Eigen::VectorXd positions;       // deformed vertex positions, interleaved
  Eigen::VectorXd values;          // vertex densities on the deformed mesh
  double mass = 0.0;
  double min_value = 0.0;
  int negatives_clamped = 0;
  std::string warning;
};

struct ReconConfig2D {
  double epsilon = 1e-2; // screening length^2 of the smoothing solve
  bool coercive_sign = true; // false: keep the sign convention as printed
  bool clamp_negative = true;
};

// Project the push-forward density rho = rho_ref / det(DPhi) onto P1 on the
// *transformed* mesh by a screened L2 projection:
//   eps (grad rho_h, grad w) + (rho_h, w) = (rho_ref / det, w)
// over the deformed domain.  The load integrates exactly: pulling back to the
// reference element cancels det, leaving rho_ref |e_ref| / 3 per vertex.
inline DensityField2D reconstruct_2d(const Diffeo2D &phi, double rho_ref,
                                     const ReconConfig2D &cfg = {},
                                     const Eigen::VectorXd *elem_ref = nullptr) {
  const TriMesh &mesh = *phi.mesh;
  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();
  DensityField2D out;
  out.mesh = &mesh;
  out.positions = phi.values;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nv);
  double min_det = 1e300;

  for (int t = 0; t < nt; ++t) {
    const auto &tri = mesh.triangles[t];
    Eigen::Vector2d p0 = phi.pos(tri[0]), p1 = phi.pos(tri[1]), p2 = phi.pos(tri[2]);
    const double twoA = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    if (!(twoA > 0.0))
      throw DegenerateMapError("reconstruct_2d: inverted element " + std::to_string(t));
    const double area = 0.5 * twoA;
    min_det = std::min(min_det, element_det(mesh, phi, t));

    // P1 hat gradients on the deformed element
    Eigen::Vector2d g[3];
    g[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / twoA;
    g[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / twoA;
    g[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / twoA;

    const double ssign = cfg.coercive_sign ? 1.0 : -1.0;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) {
        double v = ssign * cfg.epsilon * area * g[a].dot(g[c]);
        v += area / 12.0 * (a == c ? 2.0 : 1.0);
        A(tri[a], tri[c]) += v;
      }

    const double re = elem_ref ? (*elem_ref)[t] : rho_ref;
    for (int a = 0; a < 3; ++a) b[tri[a]] += re * mesh.area[t] / 3.0;
  }

  if (min_det < 1e-10)
    out.warning = "near-degenerate elements (min det " + std::to_string(min_det) +
                  "); reconstruction may be ill-conditioned";

  if (cfg.coercive_sign) {
    out.values = A.ldlt().solve(b);
  } else {
    out.values = A.partialPivLu().solve(b);
  }

  out.min_value = out.values.minCoeff();
  if (cfg.clamp_negative) {
    for (int i = 0; i < nv; ++i)
      if (out.values[i] < 0.0) {
        out.values[i] = 0.0;
        ++out.negatives_clamped;
      }
  }

  out.mass = 0.0;
  for (int t = 0; t < nt; ++t) {
    const auto &tri = mesh.triangles[t];
    Eigen::Vector2d p0 = phi.pos(tri[0]), p1 = phi.pos(tri[1]), p2 = phi.pos(tri[2]);
    const double area = 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                               (p2.x() - p0.x()) * (p1.y() - p0.y()));
    out.mass += area * (out.values[tri[0]] + out.values[tri[1]] + out.values[tri[2]]) / 3.0;
  }
  return out;
}

// Relative mass defect of a reconstructed field against the expected mass.
inline double mass_check(double reconstructed_mass, double expected_mass) {
  return std::abs(reconstructed_mass - expected_mass) / std::abs(expected_mass);
}

} // namespace lagflow
