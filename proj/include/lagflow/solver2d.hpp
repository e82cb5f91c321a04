#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/potentials.hpp"

namespace lagflow {

struct SolverConfig2D {
  double dt = 1e-2;
  double eps_residual = 1e-6;
  double eps_step = 1e-6;
  int max_newton = 50;
  double damping_min = 1.0 / 64.0;
  bool pin_boundary = true; // identity pinning of boundary vertices
};

struct NewtonReport {
  bool converged = false;
  int newton_iters = 0;
  double residual_norm = 0.0;
  double step_norm = 0.0;
  std::vector<double> residual_history;
  std::vector<double> damping_history;
  bool orientation_ok = true;
  std::string message;
};

namespace detail {

inline double elem_ref_density(const EnergySpec &spec, const Eigen::VectorXd *elem_ref, int t) {
  return elem_ref ? (*elem_ref)[t] : spec.reference_density;
}

} // namespace detail

// Weak-form residual, all vertices, interleaved (x,y) per vertex.  This is the
// exact gradient of the implicit-step functional
//   1/(2 dt) ||Phi - Phi_old||^2_{L2(ref)} + discrete free energy,
// with the P1 mass matrix exact per element, Psi' cof DPhi against grad of the
// hats for the diffusion part, and one-point barycenter quadrature for V and W
// (pairwise over elements, diagonal pair skipped).
inline Eigen::VectorXd assemble_residual_2d_full(const Diffeo2D &phi_new, const Diffeo2D &phi_old,
                                                 const EnergySpec &spec, const SolverConfig2D &cfg,
                                                 const Eigen::VectorXd *elem_ref = nullptr) {
  const TriMesh &mesh = *phi_new.mesh;
  const int nt = mesh.n_triangles();
  const int nv = mesh.n_vertices();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * nv);

  for (int t = 0; t < nt; ++t) {
    const auto &tri = mesh.triangles[t];
    const double re = detail::elem_ref_density(spec, elem_ref, t);
    const double mfac = re * mesh.area[t] / (12.0 * cfg.dt);
    Eigen::Vector2d d[3];
    for (int a = 0; a < 3; ++a) d[a] = phi_new.pos(tri[a]) - phi_old.pos(tri[a]);
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector2d contrib = mfac * (2.0 * d[a] + d[(a + 1) % 3] + d[(a + 2) % 3]);
      r.segment<2>(2 * tri[a]) += contrib;
    }
  }

  if (spec.internal.kind != InternalKind::none) {
    for (int t = 0; t < nt; ++t) {
      const ElementGeometry geo = element_geometry(mesh, phi_new, t);
      const double re = detail::elem_ref_density(spec, elem_ref, t);
      const double dpsi = psi_derivatives(spec.internal, geo.det, re).dpsi;
      const auto &tri = mesh.triangles[t];
      for (int a = 0; a < 3; ++a)
        r.segment<2>(2 * tri[a]) += mesh.area[t] * dpsi * (geo.cof * geo.hat_gradients[a]);
    }
  }

  if (spec.external.kind != ExternalKind::none) {
    for (int t = 0; t < nt; ++t) {
      const double re = detail::elem_ref_density(spec, elem_ref, t);
      const Eigen::Vector2d gv = potential_eval_2d(spec.external, phi_new.barycenter_image(t)).grad;
      const auto &tri = mesh.triangles[t];
      for (int a = 0; a < 3; ++a)
        r.segment<2>(2 * tri[a]) += re * mesh.area[t] / 3.0 * gv;
    }
  }

  if (spec.interaction.kind != InteractionKind::none) {
    std::vector<Eigen::Vector2d> bc(nt);
    std::vector<double> cw(nt);
    for (int t = 0; t < nt; ++t) {
      bc[t] = phi_new.barycenter_image(t);
      cw[t] = detail::elem_ref_density(spec, elem_ref, t) * mesh.area[t];
    }
    for (int t = 0; t < nt; ++t) {
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (int f = 0; f < nt; ++f) {
        if (f == t) continue;
        acc += cw[f] * interaction_eval_2d(spec.interaction, bc[t] - bc[f]).grad;
      }
      const auto &tri = mesh.triangles[t];
      const Eigen::Vector2d contrib = cw[t] / 3.0 * acc;
      for (int a = 0; a < 3; ++a) r.segment<2>(2 * tri[a]) += contrib;
    }
  }
  return r;
}

inline Eigen::MatrixXd assemble_jacobian_2d_full(const Diffeo2D &phi_new, const Diffeo2D &phi_old,
                                                 const EnergySpec &spec, const SolverConfig2D &cfg,
                                                 const Eigen::VectorXd *elem_ref = nullptr) {
  (void)phi_old;
  const TriMesh &mesh = *phi_new.mesh;
  const int nt = mesh.n_triangles();
  const int nv = mesh.n_vertices();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * nv, 2 * nv);

  for (int t = 0; t < nt; ++t) {
    const auto &tri = mesh.triangles[t];
    const double re = detail::elem_ref_density(spec, elem_ref, t);
    const double mfac = re * mesh.area[t] / (12.0 * cfg.dt);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double v = mfac * (a == b ? 2.0 : 1.0);
        J(2 * tri[a], 2 * tri[b]) += v;
        J(2 * tri[a] + 1, 2 * tri[b] + 1) += v;
      }
  }

  if (spec.internal.kind != InternalKind::none) {
    for (int t = 0; t < nt; ++t) {
      const ElementGeometry geo = element_geometry(mesh, phi_new, t);
      const double re = detail::elem_ref_density(spec, elem_ref, t);
      const PsiDerivatives pd = psi_derivatives(spec.internal, geo.det, re);
      const auto &tri = mesh.triangles[t];
      Eigen::Vector2d cg[3];
      for (int a = 0; a < 3; ++a) cg[a] = geo.cof * geo.hat_gradients[a];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          // second variation of area * Psi(det): Psi'' rank-one part plus the
          // Psi' part from the (linear) cofactor, an antisymmetric 2x2 block
          const Eigen::Matrix2d rank1 = mesh.area[t] * pd.d2psi * cg[a] * cg[b].transpose();
          const double chi = geo.hat_gradients[b].x() * geo.hat_gradients[a].y() -
                             geo.hat_gradients[b].y() * geo.hat_gradients[a].x();
          Eigen::Matrix2d blk = rank1;
          blk(0, 1) -= mesh.area[t] * pd.dpsi * chi;
          blk(1, 0) += mesh.area[t] * pd.dpsi * chi;
          J.block<2, 2>(2 * tri[a], 2 * tri[b]) += blk;
        }
    }
  }

  if (spec.external.kind != ExternalKind::none) {
    for (int t = 0; t < nt; ++t) {
      const double re = detail::elem_ref_density(spec, elem_ref, t);
      const Eigen::Matrix2d hv = potential_eval_2d(spec.external, phi_new.barycenter_image(t)).hess;
      const auto &tri = mesh.triangles[t];
      const Eigen::Matrix2d blk = re * mesh.area[t] / 9.0 * hv;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) J.block<2, 2>(2 * tri[a], 2 * tri[b]) += blk;
    }
  }

  if (spec.interaction.kind != InteractionKind::none) {
    std::vector<Eigen::Vector2d> bc(nt);
    std::vector<double> cw(nt);
    for (int t = 0; t < nt; ++t) {
      bc[t] = phi_new.barycenter_image(t);
      cw[t] = detail::elem_ref_density(spec, elem_ref, t) * mesh.area[t];
    }
    for (int t = 0; t < nt; ++t) {
      const auto &trit = mesh.triangles[t];
      for (int f = t + 1; f < nt; ++f) {
        const Eigen::Matrix2d B = cw[t] * cw[f] / 9.0 *
                                  interaction_eval_2d(spec.interaction, bc[t] - bc[f]).hess;
        const auto &trif = mesh.triangles[f];
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            J.block<2, 2>(2 * trit[a], 2 * trit[b]) += B;
            J.block<2, 2>(2 * trif[a], 2 * trif[b]) += B;
            J.block<2, 2>(2 * trit[a], 2 * trif[b]) -= B;
            J.block<2, 2>(2 * trif[a], 2 * trit[b]) -= B;
          }
      }
    }
  }
  return J;
}

namespace detail {

inline std::vector<int> free_dofs_2d(const TriMesh &mesh, bool pin_boundary) {
  std::vector<int> dofs;
  dofs.reserve(2 * mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (pin_boundary && mesh.is_boundary[v]) continue;
    dofs.push_back(2 * v);
    dofs.push_back(2 * v + 1);
  }
  return dofs;
}

} // namespace detail

// Residual restricted to the free (non-pinned) degrees of freedom.
inline Eigen::VectorXd assemble_residual_2d(const Diffeo2D &phi_new, const Diffeo2D &phi_old,
                                            const EnergySpec &spec, const SolverConfig2D &cfg,
                                            const Eigen::VectorXd *elem_ref = nullptr) {
  const Eigen::VectorXd full = assemble_residual_2d_full(phi_new, phi_old, spec, cfg, elem_ref);
  const auto dofs = detail::free_dofs_2d(*phi_new.mesh, cfg.pin_boundary);
  Eigen::VectorXd r(dofs.size());
  for (std::size_t k = 0; k < dofs.size(); ++k) r[k] = full[dofs[k]];
  return r;
}

inline Eigen::MatrixXd assemble_jacobian_2d(const Diffeo2D &phi_new, const Diffeo2D &phi_old,
                                            const EnergySpec &spec, const SolverConfig2D &cfg,
                                            const Eigen::VectorXd *elem_ref = nullptr) {
  const Eigen::MatrixXd full = assemble_jacobian_2d_full(phi_new, phi_old, spec, cfg, elem_ref);
  const auto dofs = detail::free_dofs_2d(*phi_new.mesh, cfg.pin_boundary);
  const int nf = static_cast<int>(dofs.size());
  Eigen::MatrixXd J(nf, nf);
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nf; ++j) J(i, j) = full(dofs[i], dofs[j]);
  return J;
}

inline bool orientation_ok_2d(const Diffeo2D &phi) {
  for (int t = 0; t < phi.mesh->n_triangles(); ++t)
    if (!(element_det(*phi.mesh, phi, t) > 0.0)) return false;
  return true;
}

inline std::pair<Diffeo2D, NewtonReport> advance_2d(const Diffeo2D &phi_old, const EnergySpec &spec,
                                                    const SolverConfig2D &cfg,
                                                    const Eigen::VectorXd *elem_ref = nullptr) {
  NewtonReport rep;
  Diffeo2D phi = phi_old;
  const bool need_orientation = spec.internal.kind != InternalKind::none;
  const auto dofs = detail::free_dofs_2d(*phi.mesh, cfg.pin_boundary);

  Eigen::VectorXd r = assemble_residual_2d(phi, phi_old, spec, cfg, elem_ref);
  double rn = r.norm();
  Diffeo2D trial = phi;

  for (int it = 1; it <= cfg.max_newton; ++it) {
    const Eigen::MatrixXd J = assemble_jacobian_2d(phi, phi_old, spec, cfg, elem_ref);
    const Eigen::VectorXd upd = J.partialPivLu().solve(-r);
    rep.newton_iters = it;

    if (upd.norm() <= cfg.eps_step) {
      rep.converged = true;
      rep.step_norm = upd.norm();
      rep.residual_history.push_back(rn);
      rep.damping_history.push_back(1.0);
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    double rtn = rn;
    while (alpha >= cfg.damping_min * (1.0 - 1e-12)) {
      trial.values = phi.values;
      for (std::size_t k = 0; k < dofs.size(); ++k) trial.values[dofs[k]] += alpha * upd[k];
      if (need_orientation && !orientation_ok_2d(trial)) {
        alpha *= 0.5;
        continue;
      }
      bool ok = true;
      Eigen::VectorXd rt;
      try {
        rt = assemble_residual_2d(trial, phi_old, spec, cfg, elem_ref);
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
      rep.orientation_ok = orientation_ok_2d(phi);
      rep.message = "damping exhausted without residual decrease";
      return {phi_old, rep};
    }
    phi.values = trial.values;
    rn = rtn;
    rep.residual_history.push_back(rn);
    rep.damping_history.push_back(alpha);
    rep.step_norm = alpha * upd.norm();
    if (rn <= cfg.eps_residual || rep.step_norm <= cfg.eps_step) {
      rep.converged = true;
      break;
    }
  }
  rep.residual_norm = rn;
  rep.orientation_ok = orientation_ok_2d(phi);
  if (!rep.converged && rep.message.empty()) {
    rep.message = "max Newton iterations reached";
    return {phi_old, rep};
  }
  return {phi, rep};
}

// L2 norm of a nodal vector field against the reference measure (consistent
// P1 mass matrix, per-element reference density weight).
inline double mass_norm_2d(const TriMesh &mesh, const Eigen::VectorXd &values,
                           double rho_ref, const Eigen::VectorXd *elem_ref = nullptr) {
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto &tri = mesh.triangles[t];
    const double re = elem_ref ? (*elem_ref)[t] : rho_ref;
    for (int comp = 0; comp < 2; ++comp) {
      const double u0 = values[2 * tri[0] + comp], u1 = values[2 * tri[1] + comp],
                   u2 = values[2 * tri[2] + comp];
      s += re * mesh.area[t] / 6.0 *
           (u0 * u0 + u1 * u1 + u2 * u2 + u0 * u1 + u1 * u2 + u0 * u2);
    }
  }
  return std::sqrt(s);
}

} // namespace lagflow
