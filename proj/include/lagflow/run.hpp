#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lagflow/config.hpp"
#include "lagflow/core.hpp"
#include "lagflow/density_recon.hpp"
#include "lagflow/init_map.hpp"
#include "lagflow/io.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/potentials.hpp"
#include "lagflow/solver1d.hpp"
#include "lagflow/solver2d.hpp"

namespace lagflow {

enum class Termination { horizon, steady_state, newton_failure };

inline const char *termination_name(Termination t) {
  switch (t) {
  case Termination::horizon: return "horizon";
  case Termination::steady_state: return "steady_state";
  case Termination::newton_failure: return "newton_failure";
  }
  return "unknown";
}

struct StepDiag {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  int newton_iters = 0;
  double residual_norm = 0.0;
  double step_norm = 0.0;
  double damping = 1.0;
  double move_dist = 0.0; // L2 distance between consecutive maps
};

struct Snapshot1D {
  int step = 0;
  double t = 0.0;
  Diffeo1D phi;
};

struct Snapshot2D {
  int step = 0;
  double t = 0.0;
  Eigen::VectorXd values;
};

struct RunResult {
  RunConfig cfg;
  Termination termination = Termination::horizon;
  double t_end = 0.0;
  double last_good_time = 0.0;    // blow-up estimate on newton_failure
  double steady_detect_time = -1.0;
  int steps_accepted = 0;
  double dt_final = 0.0;
  std::string failure_message;
  std::vector<std::string> deviations;
  std::vector<std::string> warnings;

  std::vector<double> times; // t_start plus one entry per accepted step
  std::vector<EnergyBreakdown> energies;
  std::vector<double> sup_density; // 1d only: max cell density per entry of times
  std::vector<StepDiag> step_diags;
  bool energy_nonincreasing = true;
  double worst_energy_increase = 0.0;

  // 1d state
  Grid1D grid;
  InitialDensity1D rho0_1d;
  std::vector<Snapshot1D> snapshots_1d;
  Diffeo1D phi_final_1d;
  DensityField1D rho_final_1d;

  // 2d state (mesh shared so the Diffeo2D back-pointers stay valid on copy)
  std::shared_ptr<TriMesh> mesh;
  InitialDensity2D rho0_2d;
  double rho_ref = 1.0;
  Eigen::VectorXd elem_ref; // per-element reference density; empty -> uniform rho_ref
  std::vector<Snapshot2D> snapshots_2d;
  Diffeo2D phi_final_2d;
  DensityField2D rho_final_2d;
  TraceReport trace_report;
  double heat_equilibration_time = 0.0;

  PushforwardError pushforward;

  const Eigen::VectorXd *elem_ref_ptr() const {
    return elem_ref.size() ? &elem_ref : nullptr;
  }
};

struct RunOptions {
  bool write_outputs = true;
  bool keep_snapshots = true;
  std::function<void(const std::string &)> log; // null -> silent
};

namespace detail {

inline InitialDensity1D make_initial_1d(const RunConfig &c) {
  if (c.initial_kind == "gaussian")
    return gaussian_density_1d(c.sigma, c.mass, c.center, c.dom_lo, c.dom_hi);
  if (c.initial_kind == "gaussian_sum") {
    double total = 0.0;
    for (double m : c.sum_masses) total += m;
    if (std::abs(total - c.mass) > 1e-9 * std::max(1.0, std::abs(total)))
      throw InvalidSpecError("initial.mass must equal the sum of initial.masses");
    return gaussian_sum_density_1d(c.sum_masses, c.sum_centers, c.sum_sigmas, c.dom_lo, c.dom_hi);
  }
  if (c.initial_kind == "barenblatt") return barenblatt_density_1d(c.bb_m, c.bb_t0, c.mass);
  if (c.initial_kind == "uniform") {
    double lo = c.uniform_lo, hi = c.uniform_hi;
    if (lo == 0.0 && hi == 0.0) {
      lo = c.dom_lo;
      hi = c.dom_hi;
    }
    return uniform_density_1d(c.mass, lo, hi);
  }
  throw InvalidSpecError("unsupported 1d initial kind '" + c.initial_kind + "'");
}

inline InitialDensity2D make_initial_2d(const RunConfig &c, const TriMesh &mesh) {
  std::vector<double> w, sg;
  std::vector<Eigen::Vector2d> ctr;
  if (c.initial_kind == "gaussian") {
    w = {1.0};
    ctr = {Eigen::Vector2d(c.center_x, c.center_y)};
    sg = {c.sigma};
  } else if (c.initial_kind == "gaussian_sum") {
    w = c.sum_masses;
    sg = c.sum_sigmas;
    for (std::size_t i = 0; i < c.sum_centers_x.size(); ++i)
      ctr.emplace_back(c.sum_centers_x[i], c.sum_centers_y[i]);
  } else {
    throw InvalidSpecError("2d initial data must be gaussian or gaussian_sum");
  }
  return offset_gaussian_density_2d(mesh, c.mass, w, ctr, sg);
}

// Shared time-stepping skeleton.  `advance` performs one implicit step and
// returns (accepted, report-ish diagnostics via out params); `move_of` measures
// the distance between consecutive maps; `on_accept` records state.
struct LoopCallbacks {
  std::function<bool(double dt, int &iters, double &resid, double &stepn, double &damp,
                     std::string &msg)>
      advance;                     // returns convergence, commits state on success
  std::function<double()> move_of; // distance from previous to current state
};

inline void time_loop(RunResult &R, const RunOptions &opt, const LoopCallbacks &cb,
                      const std::function<void(int step, double t)> &on_accept) {
  const RunConfig &c = R.cfg;
  double dt = c.dt;
  double t = c.t_start;
  const double horizon_t = (c.stop_rule == StopRule::horizon)
                               ? (c.n_steps > 0 ? c.t_start + c.n_steps * c.dt : c.t_final)
                               : std::numeric_limits<double>::infinity();
  int refine_level = 0;
  int extra_remaining = -1;
  int step = 0;
  const int log_every = (c.dimension == 1) ? 500 : 25;

  R.termination = Termination::horizon;
  while (true) {
    if (t >= horizon_t - 0.5 * dt) {
      R.termination = Termination::horizon;
      break;
    }
    if (step >= c.max_steps) {
      R.termination =
          (R.steady_detect_time >= 0.0) ? Termination::steady_state : Termination::horizon;
      R.deviations.push_back("max_steps=" + std::to_string(c.max_steps) +
                             " reached before the stop rule; stopping at t=" + io::g17(t));
      break;
    }

    int iters = 0;
    double resid = 0.0, stepn = 0.0, damp = 1.0;
    std::string msg;
    const bool ok = cb.advance(dt, iters, resid, stepn, damp, msg);
    if (!ok) {
      if (c.refine_on_failure && refine_level < 3) {
        ++refine_level;
        dt /= 10.0;
        R.deviations.push_back("newton stalled at t=" + io::g17(t) + " (" + msg +
                               "); time step refined to " + io::g17(dt));
        if (opt.log) opt.log("  refining dt to " + io::g17(dt) + " at t=" + io::g17(t));
        continue;
      }
      R.termination = Termination::newton_failure;
      R.failure_message = msg;
      break;
    }

    const double move = cb.move_of();
    ++step;
    t += dt;
    R.step_diags.push_back({step, t, dt, iters, resid, stepn, damp, move});
    on_accept(step, t);
    if (opt.log && step % log_every == 0)
      opt.log("step " + std::to_string(step) + "  t=" + io::g17(t) +
              "  E=" + io::g17(R.energies.back().total) + "  newton=" + std::to_string(iters));

    if (c.stop_rule == StopRule::steady) {
      if (extra_remaining < 0 && move < c.steady_tol) {
        extra_remaining = c.steady_extra_steps;
        R.steady_detect_time = t;
        if (opt.log)
          opt.log("steady state detected at t=" + io::g17(t) + "; running " +
                  std::to_string(c.steady_extra_steps) + " extra steps");
      } else if (extra_remaining > 0) {
        --extra_remaining;
      }
      if (extra_remaining == 0) {
        R.termination = Termination::steady_state;
        break;
      }
    }
  }
  R.t_end = R.last_good_time = t;
  R.steps_accepted = step;
  R.dt_final = dt;
}

inline void run_1d(RunResult &R, const RunOptions &opt) {
  const RunConfig &c = R.cfg;
  R.grid = build_grid_1d(c.mass, c.n_cells);
  R.rho0_1d = make_initial_1d(c);
  Diffeo1D phi = init_diffeo_1d(R.rho0_1d, R.grid, c.dom_lo, c.dom_hi);
  R.pushforward = verify_pushforward(phi, R.rho0_1d);
  if (opt.log)
    opt.log("initial map built, pushforward max residual " + io::g17(R.pushforward.max_residual));

  const EnergySpec &spec = c.energy; // 1d always runs with reference density 1
  SolverConfig1D scfg;
  scfg.eps_residual = c.eps_residual;
  scfg.eps_step = c.eps_step;
  scfg.max_newton = c.max_newton;
  scfg.damping_min = c.damping_min;
  scfg.free_boundary = c.free_boundary;

  const int snap_every = c.snapshot_every > 0 ? c.snapshot_every : 10;
  const double inf = std::numeric_limits<double>::infinity();

  auto record = [&](double t, double dt_used) {
    EnergyBreakdown e = free_energy_lagrangian(phi, spec);
    if (!R.energies.empty()) {
      const double prev = R.energies.back().total;
      const double incr = e.total - prev;
      if (incr > 1e-10 * std::max(1.0, std::abs(prev))) R.energy_nonincreasing = false;
      R.worst_energy_increase = std::max(R.worst_energy_increase, incr);
      if (dt_used > 0.0) e.dissipation_estimate = -incr / dt_used;
    }
    R.times.push_back(t);
    R.energies.push_back(e);
    const double ms = phi.min_slope();
    R.sup_density.push_back(ms > 0.0 ? 1.0 / ms : inf);
  };
  auto snapshot = [&](int step, double t) {
    if (opt.keep_snapshots) R.snapshots_1d.push_back({step, t, phi});
  };

  record(c.t_start, 0.0);
  snapshot(0, c.t_start);

  double last_move = 0.0;
  LoopCallbacks cb;
  cb.advance = [&](double dt, int &iters, double &resid, double &stepn, double &damp,
                   std::string &msg) {
    SolverConfig1D sc = scfg;
    sc.dt = dt;
    auto [next, rep] = advance_1d(phi, spec, sc);
    iters = rep.newton_iters;
    resid = rep.residual_norm;
    stepn = rep.step_norm;
    damp = rep.damping;
    msg = rep.message;
    if (!rep.converged) return false;
    last_move = wasserstein_1d(next, phi);
    phi = std::move(next);
    return true;
  };
  cb.move_of = [&]() { return last_move; };

  time_loop(R, opt, cb, [&](int step, double t) {
    record(t, R.step_diags.back().dt);
    if (step % snap_every == 0) snapshot(step, t);
  });

  R.phi_final_1d = phi;
  if (opt.keep_snapshots &&
      (R.snapshots_1d.empty() || R.snapshots_1d.back().step != R.steps_accepted))
    R.snapshots_1d.push_back({R.steps_accepted, R.t_end, phi});
  try {
    R.rho_final_1d = reconstruct_1d(phi);
  } catch (const std::exception &e) {
    R.warnings.push_back(std::string("final density reconstruction failed: ") + e.what());
  }
}

inline void run_2d(RunResult &R, const RunOptions &opt) {
  const RunConfig &c = R.cfg;
  switch (c.shape) {
  case DomainShape::disk:
    R.mesh = std::make_shared<TriMesh>(build_disk_mesh(c.radius, c.n_rings));
    break;
  case DomainShape::rectangle:
    R.mesh = std::make_shared<TriMesh>(
        build_rect_mesh(c.rect_x0, c.rect_y0, c.rect_x1, c.rect_y1, c.nx, c.ny));
    break;
  default:
    throw InvalidSpecError("2d run needs a disk or rectangle domain");
  }
  const TriMesh &mesh = *R.mesh;
  if (opt.log)
    opt.log("mesh: " + std::to_string(mesh.n_vertices()) + " vertices, " +
            std::to_string(mesh.n_triangles()) + " triangles");

  R.rho0_2d = make_initial_2d(c, mesh);
  R.rho_ref = c.mass / mesh.total_area;
  EnergySpec spec = c.energy;
  spec.reference_density = R.rho_ref;

  Diffeo2D phi;
  if (c.init_method == InitMethod::transport) {
    HeatFlowRecord rec = heat_flow_2d(R.rho0_2d, mesh);
    R.heat_equilibration_time = rec.equilibration_time;
    if (!rec.warning.empty()) R.warnings.push_back(rec.warning);
    if (opt.log)
      opt.log("heat flow equilibrated at s=" + io::g17(rec.equilibration_time) + " (" +
              std::to_string(rec.times.size()) + " snapshots)");
    auto traced = trace_back_2d(rec, mesh);
    phi = std::move(traced.first);
    R.trace_report = traced.second;
    if (!R.trace_report.warning.empty()) R.warnings.push_back(R.trace_report.warning);
    R.pushforward = verify_pushforward(phi, R.rho0_2d, R.rho_ref, nullptr);
  } else {
    phi = make_identity_2d(mesh);
    R.elem_ref.resize(mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      R.elem_ref[t] = R.rho0_2d.rho(mesh.barycenter(t));
      if (!(R.elem_ref[t] > 0.0))
        throw InvalidSpecError(
            "identity_reference needs a strictly positive density at element barycenters");
    }
    R.pushforward = verify_pushforward(phi, R.rho0_2d, R.rho_ref, R.elem_ref_ptr());
  }
  if (opt.log)
    opt.log("initial map built, pushforward max residual " + io::g17(R.pushforward.max_residual));

  SolverConfig2D scfg;
  scfg.eps_residual = c.eps_residual;
  scfg.eps_step = c.eps_step;
  scfg.max_newton = c.max_newton;
  scfg.damping_min = c.damping_min;

  const int snap_every = c.snapshot_every > 0 ? c.snapshot_every : 1;

  auto record = [&](double t, double dt_used) {
    EnergyBreakdown e = free_energy_lagrangian(phi, spec, R.elem_ref_ptr());
    if (!R.energies.empty()) {
      const double prev = R.energies.back().total;
      const double incr = e.total - prev;
      if (incr > 1e-10 * std::max(1.0, std::abs(prev))) R.energy_nonincreasing = false;
      R.worst_energy_increase = std::max(R.worst_energy_increase, incr);
      if (dt_used > 0.0) e.dissipation_estimate = -incr / dt_used;
    }
    R.times.push_back(t);
    R.energies.push_back(e);
  };
  auto snapshot = [&](int step, double t) {
    if (opt.keep_snapshots) R.snapshots_2d.push_back({step, t, phi.values});
  };

  record(c.t_start, 0.0);
  snapshot(0, c.t_start);

  double last_move = 0.0;
  LoopCallbacks cb;
  cb.advance = [&](double dt, int &iters, double &resid, double &stepn, double &damp,
                   std::string &msg) {
    SolverConfig2D sc = scfg;
    sc.dt = dt;
    auto [next, rep] = advance_2d(phi, spec, sc, R.elem_ref_ptr());
    iters = rep.newton_iters;
    resid = rep.residual_norm;
    stepn = rep.step_norm;
    damp = rep.damping_history.empty() ? 1.0 : rep.damping_history.back();
    msg = rep.message;
    if (!rep.converged) return false;
    last_move = mass_norm_2d(mesh, next.values - phi.values, 1.0);
    phi = std::move(next);
    return true;
  };
  cb.move_of = [&]() { return last_move; };

  time_loop(R, opt, cb, [&](int step, double t) {
    record(t, R.step_diags.back().dt);
    if (step % snap_every == 0) snapshot(step, t);
  });

  R.phi_final_2d = phi;
  if (opt.keep_snapshots &&
      (R.snapshots_2d.empty() || R.snapshots_2d.back().step != R.steps_accepted))
    R.snapshots_2d.push_back({R.steps_accepted, R.t_end, phi.values});
  try {
    ReconConfig2D rc;
    rc.epsilon = c.recon_epsilon;
    rc.coercive_sign = c.recon_coercive;
    R.rho_final_2d = reconstruct_2d(phi, R.rho_ref, rc, R.elem_ref_ptr());
    if (!R.rho_final_2d.warning.empty()) R.warnings.push_back(R.rho_final_2d.warning);
  } catch (const std::exception &e) {
    R.warnings.push_back(std::string("final density reconstruction failed: ") + e.what());
  }
}

inline void write_run_outputs(const RunResult &R) {
  namespace fs = std::filesystem;
  const fs::path dir = R.cfg.output_dir;
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto track = [&](const std::string &name) { files.push_back(name); };

  io::write_text(dir / "config.toml", R.cfg.source_text);
  track("config.toml");

  {
    std::vector<std::string> header = {"t", "E_internal", "E_external", "E_interaction",
                                       "E_total"};
    if (R.cfg.dimension == 1) header.push_back("rho_max");
    std::vector<std::vector<double>> rows;
    rows.reserve(R.times.size());
    for (std::size_t i = 0; i < R.times.size(); ++i) {
      const auto &e = R.energies[i];
      std::vector<double> row = {R.times[i], e.internal, e.external, e.interaction, e.total};
      if (R.cfg.dimension == 1) row.push_back(R.sup_density[i]);
      rows.push_back(std::move(row));
    }
    io::write_csv(dir / "energy.csv", header, rows);
    track("energy.csv");
  }
  {
    std::vector<std::vector<double>> rows;
    rows.reserve(R.step_diags.size());
    for (const auto &d : R.step_diags)
      rows.push_back({static_cast<double>(d.step), d.t, d.dt, static_cast<double>(d.newton_iters),
                      d.residual_norm, d.step_norm, d.damping, d.move_dist});
    io::write_csv(dir / "steps.csv",
                  {"step", "t", "dt", "newton_iters", "residual_norm", "step_norm", "damping",
                   "move_dist"},
                  rows);
    track("steps.csv");
  }

  char name[64];
  if (R.cfg.dimension == 1) {
    for (const auto &snap : R.snapshots_1d) {
      std::snprintf(name, sizeof(name), "phi_%06d.csv", snap.step);
      io::write_phi_csv_1d(dir / name, snap.phi, snap.t);
      track(name);
      std::snprintf(name, sizeof(name), "rho_%06d.csv", snap.step);
      try {
        io::write_rho_csv_1d(dir / name, reconstruct_1d(snap.phi), snap.t);
        track(name);
      } catch (const std::exception &) {
        // non-monotone snapshot (aggregation-only runs); map file is still there
      }
    }
    if (R.rho_final_1d.n_cells() > 0) {
      io::write_rho_csv_1d(dir / "rho_final.csv", R.rho_final_1d, R.t_end);
      track("rho_final.csv");
    }
  } else if (R.mesh) {
    const TriMesh &mesh = *R.mesh;
    Eigen::VectorXd ref_pos(2 * mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      ref_pos[2 * v] = mesh.vertices[v].x();
      ref_pos[2 * v + 1] = mesh.vertices[v].y();
    }
    io::write_vtk_2d(dir / "mesh.vtk", mesh, ref_pos, "lagflow reference mesh");
    track("mesh.vtk");
    for (const auto &snap : R.snapshots_2d) {
      std::snprintf(name, sizeof(name), "phi_%06d.vtk", snap.step);
      io::VtkPointData vec;
      vec.name = "phi";
      vec.is_vector = true;
      vec.values.assign(snap.values.data(), snap.values.data() + snap.values.size());
      io::write_vtk_2d(dir / name, mesh, snap.values,
                       "lagflow t=" + io::g17(snap.t) + " rho_ref=" + io::g17(R.rho_ref) +
                           " mass=" + io::g17(R.cfg.mass),
                       {vec});
      track(name);
    }
    if (R.rho_final_2d.mesh) {
      io::VtkPointData rho;
      rho.name = "rho";
      rho.values.assign(R.rho_final_2d.values.data(),
                        R.rho_final_2d.values.data() + R.rho_final_2d.values.size());
      io::write_vtk_2d(dir / "rho_final.vtk", mesh, R.rho_final_2d.positions,
                       "lagflow t=" + io::g17(R.t_end) + " rho_ref=" + io::g17(R.rho_ref) +
                           " mass=" + io::g17(R.cfg.mass),
                       {rho});
      track("rho_final.vtk");
    }
  }

  nlohmann::json j;
  j["version"] = version_string;
  j["termination"] = termination_name(R.termination);
  j["t_start"] = R.cfg.t_start;
  j["t_end"] = R.t_end;
  j["last_good_time"] = R.last_good_time;
  if (R.termination == Termination::newton_failure) {
    j["blow_up_time_estimate"] = R.last_good_time;
    j["failure_message"] = R.failure_message;
  }
  if (R.steady_detect_time >= 0.0) j["steady_detect_time"] = R.steady_detect_time;
  j["steps_accepted"] = R.steps_accepted;
  j["dt_initial"] = R.cfg.dt;
  j["dt_final"] = R.dt_final;
  j["dimension"] = R.cfg.dimension;
  j["mass"] = R.cfg.mass;
  j["reference_density"] = R.rho_ref;
  j["energy_initial"] = R.energies.empty() ? 0.0 : R.energies.front().total;
  j["energy_final"] = R.energies.empty() ? 0.0 : R.energies.back().total;
  j["energy_nonincreasing"] = R.energy_nonincreasing;
  j["worst_energy_increase"] = R.worst_energy_increase;
  j["pushforward_max_residual"] = R.pushforward.max_residual;
  j["pushforward_l1_residual"] = R.pushforward.l1_residual;
  j["deviations"] = R.deviations;
  j["warnings"] = R.warnings;
  j["config_echo"] = R.cfg.source_text;
  nlohmann::json inv = nlohmann::json::array();
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    const fs::path p = dir / f;
    inv.push_back({{"path", f},
                   {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                   {"fnv1a64", io::hex64(io::fnv1a64_file(p))}});
  }
  j["files"] = inv;
  io::write_text(dir / "manifest.json", j.dump(2) + "\n");
}

} // namespace detail

inline RunResult execute_run(const RunConfig &cfg, const RunOptions &opt = {}) {
  RunResult R;
  R.cfg = cfg;
  validate_spec(R.cfg.energy);
  if (cfg.dimension == 1)
    detail::run_1d(R, opt);
  else
    detail::run_2d(R, opt);
  if (opt.log)
    opt.log(std::string("run finished: ") + termination_name(R.termination) +
            " at t=" + io::g17(R.t_end) + " after " + std::to_string(R.steps_accepted) +
            " steps");
  if (opt.write_outputs) detail::write_run_outputs(R);
  return R;
}

} // namespace lagflow
