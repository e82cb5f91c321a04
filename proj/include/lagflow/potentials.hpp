#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/mesh.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Energy catalog.  Internal energies enter the solver only through the
// transform Psi(s) = s U(rho_ref / s) of the determinant s = det DPhi; the
// reference density rho_ref is 1 in 1d (mass grid) and M/|domain| in 2d.
// ---------------------------------------------------------------------------

enum class InternalKind { none, log_entropy, power };
enum class PowerNormalization { over_m_minus_1, over_m }; // nu s^m/(m-1) vs nu s^m/m
enum class ExternalKind { none, harmonic, double_well, log_radial };
enum class InteractionKind { none, power_law, morse, log_ks };

struct InternalEnergySpec {
  InternalKind kind = InternalKind::none;
  double m = 2.0;
  double nu = 1.0;
  PowerNormalization normalization = PowerNormalization::over_m_minus_1;
};

struct ExternalPotentialSpec {
  ExternalKind kind = ExternalKind::none;
  // log_radial: V(x) = -(alpha/beta) ln|x|
  double alpha = 1.0;
  double beta = 1.0;
};

struct InteractionSpec {
  InteractionKind kind = InteractionKind::none;
  // power_law: W(x) = |x|^a/a - |x|^b/b, with |x|^0/0 read as ln|x| scaled by
  // log_coefficient (default 1; 0 turns the repulsion off entirely).
  double a = 2.0;
  double b = 0.0;
  double log_coefficient = 1.0;
  // morse: W(x) = -C_A exp(-|x|/l_A) + C_R exp(-|x|/l_R)
  double C_A = 1.0, l_A = 1.0, C_R = 1.0, l_R = 0.5;
  // log_ks: W(x) = chi/(dim pi) ln|x|
  double chi = 1.0;
  int dim = 1;
};

struct EnergySpec {
  InternalEnergySpec internal;
  ExternalPotentialSpec external;
  InteractionSpec interaction;
  double reference_density = 1.0;
};

inline void validate_spec(const EnergySpec &s, std::vector<std::string> &problems) {
  if (s.internal.kind == InternalKind::power) {
    if (!(s.internal.m > 1.0)) problems.push_back("internal energy: power law needs m > 1");
    if (!(s.internal.nu > 0.0)) problems.push_back("internal energy: nu must be positive");
  }
  if (s.external.kind == ExternalKind::log_radial && s.external.beta == 0.0)
    problems.push_back("external potential: log_radial needs beta != 0");
  if (s.interaction.kind == InteractionKind::power_law) {
    if (!(s.interaction.a > s.interaction.b) || s.interaction.b < 0.0)
      problems.push_back("interaction: power law needs a > b >= 0");
  }
  if (s.interaction.kind == InteractionKind::morse) {
    if (!(s.interaction.l_A > 0.0) || !(s.interaction.l_R > 0.0))
      problems.push_back("interaction: morse needs positive ranges");
  }
  if (s.interaction.kind == InteractionKind::log_ks && !(s.interaction.dim == 1 || s.interaction.dim == 2))
    problems.push_back("interaction: log_ks dimension must be 1 or 2");
  if (!(s.reference_density > 0.0)) problems.push_back("reference density must be positive");
}

inline void validate_spec(const EnergySpec &s) {
  std::vector<std::string> problems;
  validate_spec(s, problems);
  if (!problems.empty()) {
    std::string msg;
    for (const auto &p : problems) {
      if (!msg.empty()) msg += "; ";
      msg += p;
    }
    throw InvalidSpecError(msg);
  }
}

// ---------------------------------------------------------------------------
// Psi transform
// ---------------------------------------------------------------------------

struct PsiDerivatives {
  double psi = 0.0, dpsi = 0.0, d2psi = 0.0;
};

inline PsiDerivatives psi_derivatives(const InternalEnergySpec &u, double s, double rho_ref = 1.0) {
  PsiDerivatives out;
  if (u.kind == InternalKind::none) return out;
  if (!(s > 0.0))
    throw DegenerateMapError("psi_derivatives: determinant argument s <= 0");
  if (u.kind == InternalKind::log_entropy) {
    // U(r) = r ln r:  Psi = rho_ref (ln rho_ref - ln s)
    out.psi = rho_ref * (std::log(rho_ref) - std::log(s));
    out.dpsi = -rho_ref / s;
    out.d2psi = rho_ref / (s * s);
    return out;
  }
  const double m = u.m;
  const double pref = u.nu * std::pow(rho_ref, m);
  const double denom = (u.normalization == PowerNormalization::over_m_minus_1) ? (m - 1.0) : m;
  // Psi = pref/denom s^{1-m}
  const double s1m = std::pow(s, 1.0 - m);
  out.psi = pref / denom * s1m;
  out.dpsi = pref / denom * (1.0 - m) * s1m / s;
  out.d2psi = pref / denom * (1.0 - m) * (-m) * s1m / (s * s);
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise evaluation of V and W with first and second derivatives
// ---------------------------------------------------------------------------

struct ScalarDerivs {
  double value = 0.0, grad = 0.0, hess = 0.0;
};

struct PlanarDerivs {
  double value = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

namespace detail {

// radial profile w(r), w'(r), w''(r) of an interaction kernel
inline void interaction_radial(const InteractionSpec &w, double r, double &v, double &d1, double &d2) {
  switch (w.kind) {
    case InteractionKind::none:
      v = d1 = d2 = 0.0;
      return;
    case InteractionKind::power_law: {
      const double ra = std::pow(r, w.a);
      v = ra / w.a;
      d1 = ra / r;
      d2 = (w.a - 1.0) * ra / (r * r);
      if (w.b > 0.0) {
        const double rb = std::pow(r, w.b);
        v -= rb / w.b;
        d1 -= rb / r;
        d2 -= (w.b - 1.0) * rb / (r * r);
      } else if (w.log_coefficient != 0.0) {
        v -= w.log_coefficient * std::log(r);
        d1 -= w.log_coefficient / r;
        d2 += w.log_coefficient / (r * r);
      }
      return;
    }
    case InteractionKind::morse: {
      const double ea = std::exp(-r / w.l_A), er = std::exp(-r / w.l_R);
      v = -w.C_A * ea + w.C_R * er;
      d1 = w.C_A / w.l_A * ea - w.C_R / w.l_R * er;
      d2 = -w.C_A / (w.l_A * w.l_A) * ea + w.C_R / (w.l_R * w.l_R) * er;
      return;
    }
    case InteractionKind::log_ks: {
      const double k = w.chi / (w.dim * M_PI);
      v = k * std::log(r);
      d1 = k / r;
      d2 = -k / (r * r);
      return;
    }
  }
  v = d1 = d2 = 0.0;
}

inline bool interaction_singular_at_origin(const InteractionSpec &w) {
  switch (w.kind) {
    case InteractionKind::none: return false;
    case InteractionKind::power_law: return w.b == 0.0 && w.log_coefficient != 0.0;
    case InteractionKind::morse: return false;
    case InteractionKind::log_ks: return true;
  }
  return false;
}

} // namespace detail

inline ScalarDerivs potential_eval_1d(const ExternalPotentialSpec &v, double x) {
  ScalarDerivs out;
  switch (v.kind) {
    case ExternalKind::none:
      return out;
    case ExternalKind::harmonic:
      out.value = 0.5 * x * x;
      out.grad = x;
      out.hess = 1.0;
      return out;
    case ExternalKind::double_well:
      out.value = 0.25 * x * x * x * x - 0.5 * x * x;
      out.grad = x * x * x - x;
      out.hess = 3.0 * x * x - 1.0;
      return out;
    case ExternalKind::log_radial: {
      if (x == 0.0) throw SingularityError("potential_eval: log_radial at the origin");
      const double c = v.alpha / v.beta;
      out.value = -c * std::log(std::abs(x));
      out.grad = -c / x;
      out.hess = c / (x * x);
      return out;
    }
  }
  return out;
}

inline PlanarDerivs potential_eval_2d(const ExternalPotentialSpec &v, const Eigen::Vector2d &x) {
  PlanarDerivs out;
  const double r2 = x.squaredNorm();
  switch (v.kind) {
    case ExternalKind::none:
      return out;
    case ExternalKind::harmonic:
      out.value = 0.5 * r2;
      out.grad = x;
      out.hess = Eigen::Matrix2d::Identity();
      return out;
    case ExternalKind::double_well:
      out.value = 0.25 * r2 * r2 - 0.5 * r2;
      out.grad = (r2 - 1.0) * x;
      out.hess = (r2 - 1.0) * Eigen::Matrix2d::Identity() + 2.0 * x * x.transpose();
      return out;
    case ExternalKind::log_radial: {
      if (r2 == 0.0) throw SingularityError("potential_eval: log_radial at the origin");
      const double c = v.alpha / v.beta;
      out.value = -0.5 * c * std::log(r2);
      out.grad = -c / r2 * x;
      out.hess = c / (r2 * r2) * (2.0 * x * x.transpose() - r2 * Eigen::Matrix2d::Identity());
      return out;
    }
  }
  return out;
}

// Odd-symmetry convention at the origin: W'(0) := 0 (and second derivative 0)
// so that principal-value cancellation is what the discrete sums implement.
// The value itself is singular at 0 for logarithmic kernels.
inline ScalarDerivs interaction_eval_1d(const InteractionSpec &w, double z) {
  ScalarDerivs out;
  if (w.kind == InteractionKind::none) return out;
  const double r = std::abs(z);
  if (r == 0.0) {
    if (detail::interaction_singular_at_origin(w))
      throw SingularityError("interaction_eval: logarithmic kernel at z = 0");
    double v, d1, d2;
    detail::interaction_radial(w, 0.0, v, d1, d2);
    out.value = v;
    return out;
  }
  double v, d1, d2;
  detail::interaction_radial(w, r, v, d1, d2);
  out.value = v;
  out.grad = (z > 0.0) ? d1 : -d1;
  out.hess = d2;
  return out;
}

inline PlanarDerivs interaction_eval_2d(const InteractionSpec &w, const Eigen::Vector2d &z) {
  PlanarDerivs out;
  if (w.kind == InteractionKind::none) return out;
  const double r = z.norm();
  if (r == 0.0) {
    if (detail::interaction_singular_at_origin(w))
      throw SingularityError("interaction_eval: logarithmic kernel at z = 0");
    double v, d1, d2;
    detail::interaction_radial(w, 0.0, v, d1, d2);
    out.value = v;
    return out;
  }
  double v, d1, d2;
  detail::interaction_radial(w, r, v, d1, d2);
  const Eigen::Vector2d u = z / r;
  out.value = v;
  out.grad = d1 * u;
  out.hess = d2 * u * u.transpose() + d1 / r * (Eigen::Matrix2d::Identity() - u * u.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// 1d interaction quadrature.  For evaluation node i the two source cells
// touching x_i are integrated by the midpoint rule (finite for singular
// kernels, catches the one-sided contribution at the ends); all other cells
// by the trapezoid rule on nodal values.  The discrete interaction energy is
//   E_W = 1/2 sum_i w_i K_i(Phi),
// and residual/Jacobian below differentiate exactly this sum, so each term is
// a linear form u = Phi_i - (source) with at most 3 participating nodes.
// ---------------------------------------------------------------------------

struct InteractionTerm {
  double coeff = 0.0;
  int n = 0;
  int idx[3] = {0, 0, 0};
  double cf[3] = {0.0, 0.0, 0.0};
};

namespace detail {

inline void push_coef(InteractionTerm &t, int index, double c) {
  for (int k = 0; k < t.n; ++k)
    if (t.idx[k] == index) {
      t.cf[k] += c;
      return;
    }
  t.idx[t.n] = index;
  t.cf[t.n] = c;
  ++t.n;
}

} // namespace detail

template <class Emit>
inline void for_each_interaction_term_1d(const Grid1D &g, Emit &&emit) {
  const int n = g.n_cells;
  const double dx = g.dx;
  InteractionTerm t;
  for (int i = 0; i <= n; ++i) {
    const double wi = g.weight(i);
    for (int c = 0; c < n; ++c) {
      if (c == i - 1 || c == i) {
        // midpoint rule on the cell touching node i
        t = InteractionTerm{};
        t.coeff = 0.5 * wi * dx;
        detail::push_coef(t, i, 1.0);
        detail::push_coef(t, c, -0.5);
        detail::push_coef(t, c + 1, -0.5);
        emit(t);
      } else {
        t = InteractionTerm{};
        t.coeff = 0.5 * wi * 0.5 * dx;
        detail::push_coef(t, i, 1.0);
        detail::push_coef(t, c, -1.0);
        emit(t);
        t = InteractionTerm{};
        t.coeff = 0.5 * wi * 0.5 * dx;
        detail::push_coef(t, i, 1.0);
        detail::push_coef(t, c + 1, -1.0);
        emit(t);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Discrete free energy of a transport map
// ---------------------------------------------------------------------------

struct EnergyBreakdown {
  double internal = 0.0;
  double external = 0.0;
  double interaction = 0.0;
  double total = 0.0;
  double dissipation_estimate = 0.0; // filled along trajectories, 0 otherwise
};

inline EnergyBreakdown free_energy_lagrangian(const Diffeo1D &phi, const EnergySpec &spec) {
  EnergyBreakdown e;
  const Grid1D &g = phi.grid;
  if (spec.internal.kind != InternalKind::none) {
    for (int c = 0; c < g.n_cells; ++c)
      e.internal += g.dx * psi_derivatives(spec.internal, phi.slope(c)).psi;
  }
  if (spec.external.kind != ExternalKind::none) {
    for (int i = 0; i < g.n_nodes(); ++i)
      e.external += g.weight(i) * potential_eval_1d(spec.external, phi.phi[i]).value;
  }
  if (spec.interaction.kind != InteractionKind::none) {
    double s = 0.0;
    for_each_interaction_term_1d(g, [&](const InteractionTerm &t) {
      double u = 0.0;
      for (int k = 0; k < t.n; ++k) u += t.cf[k] * phi.phi[t.idx[k]];
      s += t.coeff * interaction_eval_1d(spec.interaction, u).value;
    });
    e.interaction = s;
  }
  e.total = e.internal + e.external + e.interaction;
  return e;
}

// elem_ref: optional per-element reference density (defaults to the constant
// spec.reference_density; used by the identity-map initialization variant)
inline EnergyBreakdown free_energy_lagrangian(const Diffeo2D &phi, const EnergySpec &spec,
                                              const Eigen::VectorXd *elem_ref = nullptr) {
  EnergyBreakdown e;
  const TriMesh &mesh = *phi.mesh;
  const int nt = mesh.n_triangles();
  auto rho_e = [&](int t) { return elem_ref ? (*elem_ref)[t] : spec.reference_density; };
  if (spec.internal.kind != InternalKind::none) {
    for (int t = 0; t < nt; ++t)
      e.internal += mesh.area[t] * psi_derivatives(spec.internal, element_det(mesh, phi, t), rho_e(t)).psi;
  }
  if (spec.external.kind != ExternalKind::none) {
    for (int t = 0; t < nt; ++t)
      e.external += rho_e(t) * mesh.area[t] * potential_eval_2d(spec.external, phi.barycenter_image(t)).value;
  }
  if (spec.interaction.kind != InteractionKind::none) {
    std::vector<Eigen::Vector2d> bc(nt);
    std::vector<double> cw(nt);
    for (int t = 0; t < nt; ++t) {
      bc[t] = phi.barycenter_image(t);
      cw[t] = rho_e(t) * mesh.area[t];
    }
    double s = 0.0;
    for (int t = 0; t < nt; ++t)
      for (int f = t + 1; f < nt; ++f)
        s += cw[t] * cw[f] * interaction_eval_2d(spec.interaction, bc[t] - bc[f]).value;
    e.interaction = s; // 1/2 double-sum over ordered pairs = sum over unordered
  }
  e.total = e.internal + e.external + e.interaction;
  return e;
}

inline double relative_energy(double e, double e_steady) { return e - e_steady; }

inline std::vector<double> relative_energy(const std::vector<double> &e, double e_steady) {
  std::vector<double> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = e[i] - e_steady;
  return out;
}

} // namespace lagflow
