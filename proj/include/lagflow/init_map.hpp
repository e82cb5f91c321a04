#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/diagnostics.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/quadrature.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Initial densities
// ---------------------------------------------------------------------------

enum class DensityKind { gaussian, gaussian_sum, barenblatt, uniform, custom };

struct InitialDensity1D {
  DensityKind kind = DensityKind::custom;
  double mass = 0.0;
  double support_lo = 0.0, support_hi = 0.0; // where the CDF actually increases
  std::function<double(double)> rho;
  // Interior points the adaptive quadrature must not step over: peaks of
  // narrow components, support edges.  Without them a spike sitting between
  // the initial Simpson samples of a wide interval is simply missed.
  std::vector<double> quad_breaks;
};

inline InitialDensity1D gaussian_density_1d(double sigma, double mass, double center,
                                            double dom_lo, double dom_hi) {
  if (!(sigma > 0.0) || !(mass > 0.0)) throw InvalidSpecError("gaussian density: sigma, mass > 0");
  InitialDensity1D d;
  d.kind = DensityKind::gaussian;
  d.mass = mass;
  d.support_lo = dom_lo;
  d.support_hi = dom_hi;
  const double norm = mass / std::sqrt(2.0 * M_PI * sigma * sigma);
  d.rho = [norm, sigma, center](double x) {
    const double u = (x - center) / sigma;
    return norm * std::exp(-0.5 * u * u);
  };
  d.quad_breaks = {center - sigma, center, center + sigma};
  return d;
}

inline InitialDensity1D gaussian_sum_density_1d(const std::vector<double> &masses,
                                                const std::vector<double> &centers,
                                                const std::vector<double> &sigmas,
                                                double dom_lo, double dom_hi) {
  if (masses.empty() || masses.size() != centers.size() || masses.size() != sigmas.size())
    throw InvalidSpecError("gaussian_sum density: component arrays must have equal nonzero length");
  InitialDensity1D d;
  d.kind = DensityKind::gaussian_sum;
  d.support_lo = dom_lo;
  d.support_hi = dom_hi;
  std::vector<double> norms(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0) || !(sigmas[i] > 0.0))
      throw InvalidSpecError("gaussian_sum density: masses and sigmas must be positive");
    d.mass += masses[i];
    norms[i] = masses[i] / std::sqrt(2.0 * M_PI * sigmas[i] * sigmas[i]);
    d.quad_breaks.push_back(centers[i] - sigmas[i]);
    d.quad_breaks.push_back(centers[i]);
    d.quad_breaks.push_back(centers[i] + sigmas[i]);
  }
  auto centers_c = centers;
  auto sigmas_c = sigmas;
  d.rho = [norms, centers_c, sigmas_c](double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < norms.size(); ++i) {
      const double u = (x - centers_c[i]) / sigmas_c[i];
      s += norms[i] * std::exp(-0.5 * u * u);
    }
    return s;
  };
  return d;
}

inline InitialDensity1D barenblatt_density_1d(double m, double t0, double mass) {
  const ReferenceProfile p = barenblatt_profile(m, t0, mass);
  InitialDensity1D d;
  d.kind = DensityKind::barenblatt;
  d.mass = mass;
  d.support_lo = p.support_lo;
  d.support_hi = p.support_hi;
  d.rho = p.density;
  d.quad_breaks = {p.support_lo, 0.5 * (p.support_lo + p.support_hi), p.support_hi};
  return d;
}

inline InitialDensity1D uniform_density_1d(double mass, double lo, double hi) {
  if (!(mass > 0.0) || !(hi > lo)) throw InvalidSpecError("uniform density: bad mass or interval");
  InitialDensity1D d;
  d.kind = DensityKind::uniform;
  d.mass = mass;
  d.support_lo = lo;
  d.support_hi = hi;
  const double h = mass / (hi - lo);
  d.rho = [h, lo, hi](double x) { return (x >= lo && x <= hi) ? h : 0.0; };
  d.quad_breaks = {lo, 0.5 * (lo + hi), hi};
  return d;
}

struct InitialDensity2D {
  double mass = 0.0;
  std::function<double(const Eigen::Vector2d &)> rho;
};

// Gaussian (or sum of Gaussians) plus the constant offset that makes the
// barycenter-quadrature mass over the mesh hit `mass` exactly.
inline InitialDensity2D offset_gaussian_density_2d(const TriMesh &mesh, double mass,
                                                   const std::vector<double> &weights,
                                                   const std::vector<Eigen::Vector2d> &centers,
                                                   const std::vector<double> &sigmas) {
  if (weights.empty() || weights.size() != centers.size() || weights.size() != sigmas.size())
    throw InvalidSpecError("2d gaussian density: component arrays must have equal nonzero length");
  auto bumps = [weights, centers, sigmas](const Eigen::Vector2d &x) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double r2 = (x - centers[i]).squaredNorm();
      s += weights[i] / (2.0 * M_PI * sigmas[i] * sigmas[i]) *
           std::exp(-0.5 * r2 / (sigmas[i] * sigmas[i]));
    }
    return s;
  };
  double q = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) q += mesh.area[t] * bumps(mesh.barycenter(t));
  const double c = (mass - q) / mesh.total_area;
  InitialDensity2D d;
  d.mass = mass;
  d.rho = [bumps, c](const Eigen::Vector2d &x) { return bumps(x) + c; };
  return d;
}

// ---------------------------------------------------------------------------
// 1D initial diffeomorphism by CDF inversion
// ---------------------------------------------------------------------------

// Solve int_a^{Phi_i} rho0 = m_i for every mass node m_i, Newton with
// bisection fallback.  The running integral is accumulated cell by cell so
// each Newton solve only integrates from the previous node's image.
inline Diffeo1D init_diffeo_1d(const InitialDensity1D &rho0, const Grid1D &grid, double dom_lo,
                               double dom_hi) {
  // signed integral of rho0 split at the density's structural breakpoints
  const auto integ = [&rho0](double a, double b, double tol) {
    const double sign = (a <= b) ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> pts = {lo};
    for (double p : rho0.quad_breaks)
      if (p > lo && p < hi) pts.push_back(p);
    std::sort(pts.begin() + 1, pts.end());
    pts.push_back(hi);
    return sign * quad::integrate_piecewise(rho0.rho, pts, tol);
  };

  const double total = integ(dom_lo, dom_hi, 1e-12);
  if (std::abs(total - grid.mass) > 1e-6 * grid.mass)
    throw InvalidSpecError("init_diffeo_1d: density mass " + std::to_string(total) +
                           " does not match grid mass " + std::to_string(grid.mass));

  const double lo = std::max(dom_lo, rho0.support_lo);
  const double hi = std::min(dom_hi, rho0.support_hi);
  Diffeo1D phi;
  phi.grid = grid;
  phi.phi.resize(grid.n_nodes());
  phi.phi[0] = lo;
  phi.phi[grid.n_cells] = hi;

  double acc = 0.0;     // CDF value at x_prev
  double x_prev = lo;
  for (int i = 1; i < grid.n_cells; ++i) {
    const double target = grid.node(i);
    // bracket [a, b] with CDF(a) <= target <= CDF(b)
    double a = x_prev;
    double b = hi;
    double x = x_prev + grid.dx / std::max(rho0.rho(x_prev), 1e-12); // first guess
    x = std::clamp(x, a, b);
    double cdf_x = acc + integ(x_prev, x, 1e-13);
    for (int it = 0; it < 100; ++it) {
      const double f = cdf_x - target;
      if (std::abs(f) < 1e-13 * std::max(1.0, grid.mass)) break;
      (f > 0.0 ? b : a) = x;
      const double dens = rho0.rho(x);
      double x_next;
      if (dens > 1e-14) {
        x_next = x - f / dens;
        if (!(x_next > a && x_next < b)) x_next = 0.5 * (a + b); // Newton stalled: bisect
      } else {
        x_next = 0.5 * (a + b);
      }
      cdf_x += integ(x, x_next, 1e-13);
      x = x_next;
      if (b - a < 1e-15 * std::max(1.0, std::abs(b))) break;
    }
    phi.phi[i] = x;
    acc = cdf_x;
    x_prev = x;
  }

  for (int i = 0; i < grid.n_cells; ++i)
    if (!(phi.phi[i + 1] > phi.phi[i]))
      throw DegenerateMapError("init_diffeo_1d: produced a non-monotone map (density vanishing "
                               "inside the support?)");
  return phi;
}

// ---------------------------------------------------------------------------
// 2D heat-flow initialization (density-equalizing map)
// ---------------------------------------------------------------------------

struct HeatFlowRecord {
  const TriMesh *mesh = nullptr;
  double dt = 0.0;
  double tol = 0.0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> snapshots; // nodal densities, one per time
  double equilibration_time = 0.0;
  double min_density = 0.0;
  double mass_drift = 0.0; // max |mass(t) - mass(0)| over the run
  std::string warning;
};

inline HeatFlowRecord heat_flow_2d(const InitialDensity2D &rho0, const TriMesh &mesh,
                                   double dt_heat = 2e-3, double tol = 1e-6,
                                   int max_steps = 200000) {
  const int nv = mesh.n_vertices();
  HeatFlowRecord rec;
  rec.mesh = &mesh;
  rec.dt = dt_heat;
  rec.tol = tol;

  Eigen::VectorXd rho(nv);
  for (int v = 0; v < nv; ++v) {
    rho[v] = rho0.rho(mesh.vertices[v]);
    if (!(rho[v] > 0.0))
      throw InvalidSpecError("heat_flow_2d: non-positive nodal density at vertex " +
                             std::to_string(v));
  }

  // lumped mass and stiffness on the reference mesh; Neumann is natural
  Eigen::VectorXd ml = Eigen::VectorXd::Zero(nv);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv, nv);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto &tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a) {
      ml[tri[a]] += mesh.area[t] / 3.0;
      for (int b = 0; b < 3; ++b)
        K(tri[a], tri[b]) += mesh.area[t] * mesh.hat_grad[t][a].dot(mesh.hat_grad[t][b]);
    }
  }
  Eigen::MatrixXd A = dt_heat * K;
  A.diagonal() += ml;
  const Eigen::LDLT<Eigen::MatrixXd> solver(A);

  rec.times.push_back(0.0);
  rec.snapshots.push_back(rho);
  const double mass0 = ml.dot(rho);
  rec.min_density = rho.minCoeff();

  for (int step = 1; step <= max_steps; ++step) {
    const Eigen::VectorXd next = solver.solve(ml.cwiseProduct(rho).eval());
    const double t = step * dt_heat;
    rec.times.push_back(t);
    rec.snapshots.push_back(next);
    rec.min_density = std::min(rec.min_density, next.minCoeff());
    rec.mass_drift = std::max(rec.mass_drift, std::abs(ml.dot(next) - mass0));

    double diff2 = 0.0;
    for (int v = 0; v < nv; ++v) {
      const double d = next[v] - rho[v];
      diff2 += ml[v] * d * d;
    }
    rho = next;
    if (std::sqrt(diff2) <= tol) {
      rec.equilibration_time = t;
      if (rec.min_density <= 0.0)
        rec.warning = "heat flow produced a non-positive nodal value (obtuse elements?)";
      return rec;
    }
  }
  throw InvalidSpecError("heat_flow_2d: no equilibration within max_steps");
}

namespace detail {

struct LocateResult {
  int element = -1;
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
  Eigen::Vector2d point = Eigen::Vector2d::Zero(); // possibly clamped to the hull
  double exit_distance = 0.0;
};

inline Eigen::Vector3d barycentric(const TriMesh &mesh, int t, const Eigen::Vector2d &p) {
  const auto &tri = mesh.triangles[t];
  const Eigen::Vector2d &a = mesh.vertices[tri[0]];
  const Eigen::Vector2d &b = mesh.vertices[tri[1]];
  const Eigen::Vector2d &c = mesh.vertices[tri[2]];
  const double den = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  Eigen::Vector3d l;
  l[1] = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / den;
  l[2] = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / den;
  l[0] = 1.0 - l[1] - l[2];
  return l;
}

// Walk from `guess` toward the element containing p; if p is outside the mesh
// the walk stops at a hull edge and p is projected onto it.
inline LocateResult locate_point(const TriMesh &mesh, Eigen::Vector2d p, int guess) {
  LocateResult res;
  int cur = guess < 0 ? 0 : guess;
  const int max_walk = 4 * mesh.n_triangles() + 8;
  for (int step = 0; step < max_walk; ++step) {
    const Eigen::Vector3d l = barycentric(mesh, cur, p);
    int worst = 0;
    for (int k = 1; k < 3; ++k)
      if (l[k] < l[worst]) worst = k;
    if (l[worst] >= -1e-12) {
      res.element = cur;
      res.bary = l;
      res.point = p;
      return res;
    }
    const int nb = mesh.neighbor[cur][worst]; // across the edge opposite `worst`
    if (nb < 0) {
      // hull reached: project p onto the hull edge, then resume the walk in
      // case the projection lands closer to another element
      const auto &tri = mesh.triangles[cur];
      const Eigen::Vector2d &e0 = mesh.vertices[tri[(worst + 1) % 3]];
      const Eigen::Vector2d &e1 = mesh.vertices[tri[(worst + 2) % 3]];
      const Eigen::Vector2d d = e1 - e0;
      const double s = std::clamp((p - e0).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const Eigen::Vector2d proj = e0 + s * d;
      res.exit_distance = std::max(res.exit_distance, (p - proj).norm());
      p = proj;
      continue;
    }
    cur = nb;
  }
  // fall back to clamping into the last element visited
  Eigen::Vector3d l = barycentric(mesh, cur, p);
  for (int k = 0; k < 3; ++k) l[k] = std::max(l[k], 0.0);
  l /= l.sum();
  const auto &tri = mesh.triangles[cur];
  res.element = cur;
  res.bary = l;
  res.point = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
              l[2] * mesh.vertices[tri[2]];
  res.exit_distance = std::max(res.exit_distance, (p - res.point).norm());
  return res;
}

} // namespace detail

struct TraceReport {
  double boundary_slide_max = 0.0; // how far boundary vertices drifted before snapping
  double exit_distance_max = 0.0;  // worst out-of-domain excursion (clamped)
  std::string warning;
};

// Backward integration of x' = -grad rho / rho through the stored heat flow:
// classical RK4 over each snapshot interval, linear-in-time nodal values.
// The raw per-element P1 gradient is discontinuous across edges, and that
// discontinuity shows up as uncorrelated path noise between neighbouring
// vertices -- harmless for the positions but fatal for the determinants of
// the traced map.  Area-weighted recovery of the gradient to the vertices
// makes the velocity continuous and brings the push-forward residual down to
// the interpolation floor of the mesh.
inline std::pair<Diffeo2D, TraceReport> trace_back_2d(const HeatFlowRecord &record,
                                                      const TriMesh &mesh) {
  if (record.snapshots.empty() ||
      static_cast<int>(record.snapshots.front().size()) != mesh.n_vertices())
    throw InvalidSpecError("trace_back_2d: record vertex count does not match mesh");
  const int n_snap = static_cast<int>(record.snapshots.size());
  const int nv = mesh.n_vertices();

  // recovered nodal gradients, one pair of columns per snapshot
  std::vector<Eigen::MatrixXd> nodal_grad(n_snap, Eigen::MatrixXd::Zero(nv, 2));
  {
    Eigen::VectorXd patch_area = Eigen::VectorXd::Zero(nv);
    for (int t = 0; t < mesh.n_triangles(); ++t)
      for (int a = 0; a < 3; ++a) patch_area[mesh.triangles[t][a]] += mesh.area[t];
    for (int k = 0; k < n_snap; ++k) {
      const Eigen::VectorXd &rho = record.snapshots[k];
      for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto &tri = mesh.triangles[t];
        Eigen::Vector2d ge = Eigen::Vector2d::Zero();
        for (int a = 0; a < 3; ++a) ge += rho[tri[a]] * mesh.hat_grad[t][a];
        for (int a = 0; a < 3; ++a) nodal_grad[k].row(tri[a]) += mesh.area[t] * ge.transpose();
      }
      nodal_grad[k].array().colwise() /= patch_area.array();
    }
  }

  Diffeo2D phi = make_identity_2d(mesh);
  TraceReport rep;

  // incident element per vertex for walk starts
  std::vector<int> start_elem(mesh.n_vertices(), 0);
  for (int t = 0; t < mesh.n_triangles(); ++t)
    for (int a = 0; a < 3; ++a) start_elem[mesh.triangles[t][a]] = t;

  for (int v = 0; v < mesh.n_vertices(); ++v) {
    Eigen::Vector2d x = mesh.vertices[v];
    int cur = start_elem[v];
    double worst_exit = 0.0;

    // velocity at interpolation parameter u in [k, k+1] snapshot units
    auto vel = [&](double snap_u, const Eigen::Vector2d &p, int &elem_hint) -> Eigen::Vector2d {
      detail::LocateResult loc = detail::locate_point(mesh, p, elem_hint);
      elem_hint = loc.element;
      worst_exit = std::max(worst_exit, loc.exit_distance);
      const int k = std::clamp(static_cast<int>(std::floor(snap_u)), 0, n_snap - 2);
      const double th = std::clamp(snap_u - k, 0.0, 1.0);
      const auto &tri = mesh.triangles[loc.element];
      double rho_p = 0.0;
      Eigen::Vector2d grad = Eigen::Vector2d::Zero();
      for (int a = 0; a < 3; ++a) {
        const double nodal = (1.0 - th) * record.snapshots[k][tri[a]] +
                             th * record.snapshots[k + 1][tri[a]];
        rho_p += loc.bary[a] * nodal;
        grad += loc.bary[a] * ((1.0 - th) * nodal_grad[k].row(tri[a]) +
                               th * nodal_grad[k + 1].row(tri[a]))
                                  .transpose();
      }
      if (!(rho_p > 0.0)) throw DegenerateMapError("trace_back_2d: non-positive density on path");
      return -grad / rho_p;
    };

    const double h = -record.dt; // backward in time
    for (int k = n_snap - 1; k > 0; --k) {
      const double u1 = static_cast<double>(k);
      const Eigen::Vector2d k1 = vel(u1, x, cur);
      const Eigen::Vector2d k2 = vel(u1 - 0.5, x + 0.5 * h * k1, cur);
      const Eigen::Vector2d k3 = vel(u1 - 0.5, x + 0.5 * h * k2, cur);
      const Eigen::Vector2d k4 = vel(u1 - 1.0, x + h * k3, cur);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      // keep the state inside the mesh
      detail::LocateResult loc = detail::locate_point(mesh, x, cur);
      cur = loc.element;
      worst_exit = std::max(worst_exit, loc.exit_distance);
      x = loc.point;
    }

    rep.exit_distance_max = std::max(rep.exit_distance_max, worst_exit);
    if (mesh.is_boundary[v]) {
      rep.boundary_slide_max =
          std::max(rep.boundary_slide_max, (x - mesh.vertices[v]).norm());
      x = mesh.vertices[v]; // identity pinning wants boundary vertices fixed
    }
    phi.set_pos(v, x);
  }

  if (rep.exit_distance_max > 0.5 * mesh.h_max)
    rep.warning = "backward trace left the domain by " + std::to_string(rep.exit_distance_max) +
                  " (clamped)";
  return {phi, rep};
}

// ---------------------------------------------------------------------------
// Push-forward verification
// ---------------------------------------------------------------------------

struct PushforwardError {
  double max_residual = 0.0;
  double l1_residual = 0.0; // against the normalized reference measure
};

inline PushforwardError verify_pushforward(const Diffeo1D &phi, const InitialDensity1D &rho0) {
  PushforwardError err;
  const double M = phi.grid.mass;
  for (int c = 0; c < phi.grid.n_cells; ++c) {
    const double mid = 0.5 * (phi.phi[c] + phi.phi[c + 1]);
    const double resid = std::abs(rho0.rho(mid) * phi.slope(c) - 1.0);
    err.max_residual = std::max(err.max_residual, resid);
    err.l1_residual += phi.grid.dx / M * resid;
  }
  return err;
}

inline PushforwardError verify_pushforward(const Diffeo2D &phi, const InitialDensity2D &rho0,
                                           double rho_ref,
                                           const Eigen::VectorXd *elem_ref = nullptr) {
  PushforwardError err;
  const TriMesh &mesh = *phi.mesh;
  double mass = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t)
    mass += (elem_ref ? (*elem_ref)[t] : rho_ref) * mesh.area[t];
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double re = elem_ref ? (*elem_ref)[t] : rho_ref;
    const double det = element_det(mesh, phi, t);
    const double resid = std::abs(rho0.rho(phi.barycenter_image(t)) * det / re - 1.0);
    err.max_residual = std::max(err.max_residual, resid);
    err.l1_residual += re * mesh.area[t] / mass * resid;
  }
  return err;
}

} // namespace lagflow
