#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "lagflow/core.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/potentials.hpp"

namespace lagflow {

struct SolverConfig1D {
  double dt = 1e-3;
  double eps_residual = 1e-6; // eps1, l2 norm of the residual
  double eps_step = 1e-6;     // eps2, l2 norm of the damped update
  int max_newton = 50;
  double damping_min = 1.0 / 64.0;
  bool free_boundary = false;
};

struct StepReport {
  bool converged = false;
  int newton_iters = 0;
  double residual_norm = 0.0;
  double damping = 1.0;    // damping of the last accepted update
  double step_norm = 0.0;  // norm of the last damped update
  bool monotone = true;
  std::string message;
};

namespace detail {

// Exact gradient / Hessian of the discrete interaction energy (the term list
// of for_each_interaction_term_1d).  Rows are later scaled by 1/w_i.
inline void add_interaction_gradient_1d(const Grid1D &g, const Eigen::VectorXd &phi,
                                        const InteractionSpec &w, Eigen::VectorXd &grad) {
  for_each_interaction_term_1d(g, [&](const InteractionTerm &t) {
    double u = 0.0;
    for (int k = 0; k < t.n; ++k) u += t.cf[k] * phi[t.idx[k]];
    const double d1 = interaction_eval_1d(w, u).grad;
    for (int k = 0; k < t.n; ++k) grad[t.idx[k]] += t.coeff * d1 * t.cf[k];
  });
}

inline void add_interaction_hessian_1d(const Grid1D &g, const Eigen::VectorXd &phi,
                                       const InteractionSpec &w, Eigen::MatrixXd &hess) {
  for_each_interaction_term_1d(g, [&](const InteractionTerm &t) {
    double u = 0.0;
    for (int k = 0; k < t.n; ++k) u += t.cf[k] * phi[t.idx[k]];
    const double d2 = interaction_eval_1d(w, u).hess;
    for (int j = 0; j < t.n; ++j)
      for (int k = 0; k < t.n; ++k)
        hess(t.idx[j], t.idx[k]) += t.coeff * d2 * t.cf[j] * t.cf[k];
  });
}

} // namespace detail

// Rows: (Phi_i - Phi_i^old)/dt - [Psi'(delta_{i+1/2}) - Psi'(delta_{i-1/2})]/dx
//       + V'(Phi_i) + (interaction quadrature).
// Endpoint rows copy the nearest interior flux stencil one-sided, so a uniform
// slope produces a zero flux difference there too.  With free_boundary the
// endpoint rows are owned by the explicit front update and read zero here.
inline Eigen::VectorXd residual_1d(const Diffeo1D &phi_new, const Diffeo1D &phi_old,
                                   const EnergySpec &spec, const SolverConfig1D &cfg) {
  const Grid1D &g = phi_new.grid;
  const int n = g.n_cells;
  Eigen::VectorXd r = (phi_new.phi - phi_old.phi) / cfg.dt;

  if (spec.internal.kind != InternalKind::none) {
    Eigen::VectorXd fp(n); // Psi'(slope) per cell
    for (int c = 0; c < n; ++c)
      fp[c] = psi_derivatives(spec.internal, phi_new.slope(c)).dpsi;
    for (int i = 1; i < n; ++i) r[i] -= (fp[i] - fp[i - 1]) / g.dx;
    // One-sided endpoint rows are the exact gradient of the discrete energy
    // against the trapezoid node weights (w = dx/2 at the ends); anything else
    // here breaks monotone energy decay of the implicit step.
    r[0] -= fp[0] / g.weight(0);
    r[n] += fp[n - 1] / g.weight(n);
  }
  if (spec.external.kind != ExternalKind::none) {
    for (int i = 0; i <= n; ++i) r[i] += potential_eval_1d(spec.external, phi_new.phi[i]).grad;
  }
  if (spec.interaction.kind != InteractionKind::none) {
    Eigen::VectorXd gw = Eigen::VectorXd::Zero(n + 1);
    detail::add_interaction_gradient_1d(g, phi_new.phi, spec.interaction, gw);
    for (int i = 0; i <= n; ++i) r[i] += gw[i] / g.weight(i);
  }
  if (cfg.free_boundary) {
    r[0] = 0.0;
    r[n] = 0.0;
  }
  return r;
}

inline Eigen::MatrixXd jacobian_1d(const Diffeo1D &phi_new, const Diffeo1D &phi_old,
                                   const EnergySpec &spec, const SolverConfig1D &cfg) {
  (void)phi_old;
  const Grid1D &g = phi_new.grid;
  const int n = g.n_cells;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
  J.diagonal().setConstant(1.0 / cfg.dt);

  if (spec.internal.kind != InternalKind::none) {
    const double dx2 = g.dx * g.dx;
    Eigen::VectorXd fpp(n);
    for (int c = 0; c < n; ++c)
      fpp[c] = psi_derivatives(spec.internal, phi_new.slope(c)).d2psi;
    for (int i = 1; i < n; ++i) {
      J(i, i - 1) -= fpp[i - 1] / dx2;
      J(i, i) += (fpp[i] + fpp[i - 1]) / dx2;
      J(i, i + 1) -= fpp[i] / dx2;
    }
    const double we = g.dx * g.weight(0); // same at both ends
    J(0, 0) += fpp[0] / we;
    J(0, 1) -= fpp[0] / we;
    J(n, n) += fpp[n - 1] / we;
    J(n, n - 1) -= fpp[n - 1] / we;
  }
  if (spec.external.kind != ExternalKind::none) {
    for (int i = 0; i <= n; ++i)
      J(i, i) += potential_eval_1d(spec.external, phi_new.phi[i]).hess;
  }
  if (spec.interaction.kind != InteractionKind::none) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
    detail::add_interaction_hessian_1d(g, phi_new.phi, spec.interaction, H);
    for (int i = 0; i <= n; ++i) J.row(i) += H.row(i) / g.weight(i);
  }
  if (cfg.free_boundary) {
    J.row(0).setZero();
    J.row(n).setZero();
    J(0, 0) = 1.0;
    J(n, n) = 1.0;
  }
  return J;
}

// Explicit one-sided front velocities for compactly supported porous-medium
// runs: v = -c_U d(rho^{m-1})/dx with rho = 0 at the support boundary and the
// first cell density at the cell midpoint.  c_U = nu m/(m-1) resp. nu for the
// two power normalizations.
inline std::pair<double, double> free_boundary_velocity(const Diffeo1D &phi, const EnergySpec &spec) {
  if (spec.internal.kind != InternalKind::power)
    throw InvalidSpecError("free_boundary_velocity: needs a power-law internal energy");
  const Grid1D &g = phi.grid;
  const int n = g.n_cells;
  const double m = spec.internal.m;
  const double c_u = (spec.internal.normalization == PowerNormalization::over_m_minus_1)
                         ? spec.internal.nu * m / (m - 1.0)
                         : spec.internal.nu;
  const double dl = phi.slope(0), dr = phi.slope(n - 1);
  if (!(dl > 0.0) || !(dr > 0.0))
    throw DegenerateMapError("free_boundary_velocity: non-positive boundary slope");
  const double rho_l = 1.0 / dl, rho_r = 1.0 / dr;
  const double v_left = -c_u * std::pow(rho_l, m - 1.0) / (0.5 * (phi.phi[1] - phi.phi[0]));
  const double v_right = c_u * std::pow(rho_r, m - 1.0) / (0.5 * (phi.phi[n] - phi.phi[n - 1]));
  return {v_left, v_right};
}

inline std::pair<Diffeo1D, StepReport> advance_1d(const Diffeo1D &phi_old, const EnergySpec &spec,
                                                  const SolverConfig1D &cfg) {
  StepReport rep;
  Diffeo1D phi = phi_old;
  const bool need_monotone = spec.internal.kind != InternalKind::none;

  if (cfg.free_boundary) {
    const auto [vl, vr] = free_boundary_velocity(phi_old, spec);
    phi.phi[0] += cfg.dt * vl;
    phi.phi[phi.grid.n_cells] += cfg.dt * vr;
  }

  Eigen::VectorXd r = residual_1d(phi, phi_old, spec, cfg);
  double rn = r.norm();
  Diffeo1D trial = phi;

  for (int it = 1; it <= cfg.max_newton; ++it) {
    const Eigen::MatrixXd J = jacobian_1d(phi, phi_old, spec, cfg);
    const Eigen::VectorXd upd = J.partialPivLu().solve(-r);
    rep.newton_iters = it;

    if (upd.norm() <= cfg.eps_step) {
      rep.converged = true;
      rep.damping = 1.0;
      rep.step_norm = upd.norm();
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    double rtn = rn;
    while (alpha >= cfg.damping_min * (1.0 - 1e-12)) {
      trial.phi = phi.phi + alpha * upd;
      if (need_monotone && !trial.monotone()) {
        alpha *= 0.5;
        continue;
      }
      bool ok = true;
      Eigen::VectorXd rt;
      try {
        rt = residual_1d(trial, phi_old, spec, cfg);
      } catch (const std::domain_error &) {
        ok = false;
      }
      if (ok) {
        rtn = rt.norm();
        if (rtn < rn) {
          r.swap(rt);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      rep.converged = false;
      rep.residual_norm = rn;
      rep.monotone = phi.monotone();
      rep.message = "damping exhausted without residual decrease";
      return {phi_old, rep};
    }
    phi.phi = trial.phi;
    rn = rtn;
    rep.damping = alpha;
    rep.step_norm = alpha * upd.norm();
    if (rn <= cfg.eps_residual || rep.step_norm <= cfg.eps_step) {
      rep.converged = true;
      break;
    }
  }
  rep.residual_norm = rn;
  rep.monotone = phi.monotone();
  if (!rep.converged && rep.message.empty()) {
    rep.message = "max Newton iterations reached";
    return {phi_old, rep};
  }
  return {phi, rep};
}

// L2([0,M]) distance of two maps on the same grid by cell-midpoint quadrature.
// For monotone maps this is the 1d Wasserstein distance of the transported
// densities.
inline double wasserstein_1d(const Diffeo1D &a, const Diffeo1D &b) {
  if (a.grid.n_cells != b.grid.n_cells || a.grid.dx != b.grid.dx)
    throw InvalidSpecError("wasserstein_1d: grids differ");
  double s = 0.0;
  for (int c = 0; c < a.grid.n_cells; ++c) {
    const double d0 = a.phi[c] - b.phi[c];
    const double d1 = a.phi[c + 1] - b.phi[c + 1];
    const double mid = 0.5 * (d0 + d1);
    s += a.grid.dx * mid * mid;
  }
  return std::sqrt(s);
}

} // namespace lagflow
