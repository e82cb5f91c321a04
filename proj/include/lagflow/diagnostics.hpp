#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/potentials.hpp"
#include "lagflow/quadrature.hpp"
#include "lagflow/solver2d.hpp"
#include "lagflow/density_recon.hpp"

namespace lagflow {

struct Trajectory {
  std::vector<double> times;
  std::vector<EnergyBreakdown> energies;
};

// ---------------------------------------------------------------------------
// Closed-form reference profiles
// ---------------------------------------------------------------------------

enum class ProfileKind { barenblatt, fp_steady, constant_interval, semicircle, mill_annulus, hv_blowup };

struct ReferenceProfile {
  ProfileKind kind;
  double mass = 0.0;
  double support_lo = 0.0; // outer support bounds (radii for mill_annulus)
  double support_hi = 0.0;
  std::function<double(double)> density; // x -> rho (r -> rho for mill_annulus)
  // kind-specific constants, kept around for front positions etc.
  double alpha = 0.0, kappa = 0.0, c = 0.0, t = 0.0, m = 0.0;
};

// Self-similar PME profile rho(x,t) = t^{-a} (c - k x^2 t^{-2a})_+^{1/(m-1)},
// a = 1/(m+1), k = a(m-1)/(2m), c normalized so the profile carries `mass`.
inline ReferenceProfile barenblatt_profile(double m, double t, double mass) {
  if (!(m > 1.0) || !(t > 0.0) || !(mass > 0.0))
    throw InvalidSpecError("barenblatt_profile: need m > 1, t > 0, mass > 0");
  ReferenceProfile p;
  p.kind = ProfileKind::barenblatt;
  p.mass = mass;
  p.m = m;
  p.t = t;
  p.alpha = 1.0 / (m + 1.0);
  p.kappa = p.alpha * (m - 1.0) / (2.0 * m);
  // mass = c^{q+1/2} / sqrt(k) * sqrt(pi) Gamma(q+1)/Gamma(q+3/2), q = 1/(m-1)
  const double q = 1.0 / (m - 1.0);
  p.c = std::pow(mass * std::sqrt(p.kappa) * std::tgamma(q + 1.5) /
                     (std::sqrt(M_PI) * std::tgamma(q + 1.0)),
                 1.0 / (q + 0.5));
  const double front = std::sqrt(p.c / p.kappa) * std::pow(t, p.alpha);
  p.support_lo = -front;
  p.support_hi = front;
  const double a = p.alpha, k = p.kappa, c = p.c;
  p.density = [m, t, a, k, c](double x) {
    const double s = c - k * x * x * std::pow(t, -2.0 * a);
    return s > 0.0 ? std::pow(t, -a) * std::pow(s, 1.0 / (m - 1.0)) : 0.0;
  };
  return p;
}

inline double barenblatt_front(double m, double mass, double t) {
  const ReferenceProfile p = barenblatt_profile(m, t, mass);
  return p.support_hi;
}

// Fokker-Planck steady state: U'(rho) + V = C on the support, C fixed by the
// mass constraint.  Power internal energies give ((C-V)_+ * (m-1)/(nu m))^{1/(m-1)}
// style formulas depending on the normalization; log entropy gives the Gibbs
// measure.  C is found by bisection on the (monotone) mass functional.
inline ReferenceProfile fp_steady_profile(const InternalEnergySpec &internal,
                                          const ExternalPotentialSpec &external,
                                          double dom_lo, double dom_hi, double mass) {
  if (!(mass > 0.0) || !(dom_hi > dom_lo))
    throw InvalidSpecError("fp_steady_profile: bad mass or domain");
  ReferenceProfile p;
  p.kind = ProfileKind::fp_steady;
  p.mass = mass;
  p.m = internal.m;

  auto V = [&external](double x) { return potential_eval_1d(external, x).value; };

  std::function<double(double, double)> rho_of; // (C, x) -> rho
  if (internal.kind == InternalKind::log_entropy) {
    // U'(s) = ln s + 1  =>  rho = exp(C - 1 - V)
    rho_of = [V](double C, double x) { return std::exp(C - 1.0 - V(x)); };
  } else if (internal.kind == InternalKind::power) {
    // U'(s) = coef * s^{m-1}
    const double coef = internal.normalization == PowerNormalization::over_m_minus_1
                            ? internal.nu * internal.m / (internal.m - 1.0)
                            : internal.nu;
    const double m = internal.m;
    rho_of = [V, coef, m](double C, double x) {
      const double s = C - V(x);
      return s > 0.0 ? std::pow(s / coef, 1.0 / (m - 1.0)) : 0.0;
    };
  } else {
    throw InvalidSpecError("fp_steady_profile: internal energy must be log_entropy or power");
  }

  auto mass_of = [&](double C) {
    return quad::integrate([&](double x) { return rho_of(C, x); }, dom_lo, dom_hi, 1e-12);
  };

  // bracket C
  double vmin = 1e300;
  const int nscan = 20000;
  for (int i = 0; i <= nscan; ++i) {
    const double x = dom_lo + (dom_hi - dom_lo) * i / nscan;
    vmin = std::min(vmin, V(x));
  }
  double lo = internal.kind == InternalKind::log_entropy ? vmin - 50.0 : vmin;
  double hi = vmin + 1.0;
  while (mass_of(hi) < mass) {
    lo = hi;
    hi = vmin + 2.0 * (hi - vmin);
    if (hi > vmin + 1e12) throw InvalidSpecError("fp_steady_profile: mass bracket failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass_of(mid) < mass ? lo : hi) = mid;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  p.c = 0.5 * (lo + hi);

  const double C = p.c;
  p.density = [rho_of, C](double x) { return rho_of(C, x); };

  if (internal.kind == InternalKind::log_entropy) {
    p.support_lo = dom_lo;
    p.support_hi = dom_hi;
  } else {
    // outermost support bounds: scan for the sign change of C - V, then bisect
    auto g = [&](double x) { return C - V(x); };
    double slo = dom_lo, shi = dom_hi;
    const int ns = 40000;
    for (int i = 0; i < ns; ++i) {
      const double x0 = dom_lo + (dom_hi - dom_lo) * i / ns;
      const double x1 = dom_lo + (dom_hi - dom_lo) * (i + 1) / ns;
      if (g(x0) <= 0.0 && g(x1) > 0.0) {
        double a = x0, b = x1;
        for (int k = 0; k < 80; ++k) {
          const double mid = 0.5 * (a + b);
          (g(mid) <= 0.0 ? a : b) = mid;
        }
        slo = 0.5 * (a + b);
        break;
      }
      if (i == 0 && g(x0) > 0.0) slo = dom_lo;
    }
    for (int i = ns; i > 0; --i) {
      const double x0 = dom_lo + (dom_hi - dom_lo) * (i - 1) / ns;
      const double x1 = dom_lo + (dom_hi - dom_lo) * i / ns;
      if (g(x1) <= 0.0 && g(x0) > 0.0) {
        double a = x0, b = x1;
        for (int k = 0; k < 80; ++k) {
          const double mid = 0.5 * (a + b);
          (g(mid) > 0.0 ? a : b) = mid;
        }
        shi = 0.5 * (a + b);
        break;
      }
      if (i == ns && g(x1) > 0.0) shi = dom_hi;
    }
    p.support_lo = slo;
    p.support_hi = shi;
  }
  return p;
}

// Steady state of the (2,1) aggregation equation: uniform density mass/2 on an
// interval of length 2 around the center of mass.
inline ReferenceProfile constant_interval_profile(double mass, double center = 0.0) {
  if (!(mass > 0.0)) throw InvalidSpecError("constant_interval_profile: mass > 0 required");
  ReferenceProfile p;
  p.kind = ProfileKind::constant_interval;
  p.mass = mass;
  p.support_lo = center - 1.0;
  p.support_hi = center + 1.0;
  const double h = mass / 2.0, lo = p.support_lo, hi = p.support_hi;
  p.density = [h, lo, hi](double x) { return (x >= lo && x <= hi) ? h : 0.0; };
  return p;
}

// Steady state of the (2,0) aggregation equation: semicircle law on [-sqrt2, sqrt2].
inline ReferenceProfile semicircle_profile(double mass) {
  if (!(mass > 0.0)) throw InvalidSpecError("semicircle_profile: mass > 0 required");
  ReferenceProfile p;
  p.kind = ProfileKind::semicircle;
  p.mass = mass;
  p.support_lo = -std::sqrt(2.0);
  p.support_hi = std::sqrt(2.0);
  p.density = [mass](double x) {
    const double s = 2.0 - x * x;
    return s > 0.0 ? mass / M_PI * std::sqrt(s) : 0.0;
  };
  return p;
}

// Mill steady state: uniform annulus, radii R_i = sqrt(alpha/(beta mass)) and
// R_o = sqrt(R_i^2 + log_coeff), for V = -(alpha/beta) ln r with the (2,0)
// kernel carrying a log repulsion of strength log_coeff.
inline ReferenceProfile mill_annulus_profile(double alpha, double beta, double mass = 1.0,
                                             double log_coeff = 1.0 / (2.0 * M_PI)) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(mass > 0.0) || !(log_coeff > 0.0))
    throw InvalidSpecError("mill_annulus_profile: parameters must be positive");
  ReferenceProfile p;
  p.kind = ProfileKind::mill_annulus;
  p.mass = mass;
  p.support_lo = std::sqrt(alpha / (beta * mass));
  p.support_hi = std::sqrt(alpha / (beta * mass) + log_coeff);
  const double h = mass / (M_PI * log_coeff), ri = p.support_lo, ro = p.support_hi;
  p.density = [h, ri, ro](double r) { return (r >= ri && r <= ro) ? h : 0.0; };
  return p;
}

// Herrero-Velazquez blow-up profile 2 sqrt(gamma) / (1 + gamma x^2); carries
// the critical mass 2 pi for every gamma.
inline ReferenceProfile hv_blowup_profile(double gamma) {
  if (!(gamma > 0.0)) throw InvalidSpecError("hv_blowup_profile: gamma > 0 required");
  ReferenceProfile p;
  p.kind = ProfileKind::hv_blowup;
  p.mass = 2.0 * M_PI;
  p.support_lo = -1e300;
  p.support_hi = 1e300;
  p.c = gamma;
  p.density = [gamma](double x) { return 2.0 * std::sqrt(gamma) / (1.0 + gamma * x * x); };
  return p;
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

enum class RateModel { power_law_in_t, exponential_in_t };

struct RateFit {
  RateModel model = RateModel::power_law_in_t;
  double rate = 0.0;
  double log_amplitude = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  int n_used = 0;
  std::string warning;
};

inline RateFit fit_rate(const std::vector<double> &times, const std::vector<double> &values,
                        RateModel model, double window_lo, double window_hi,
                        int min_samples = 10) {
  if (times.size() != values.size())
    throw InvalidSpecError("fit_rate: times/values length mismatch");
  RateFit fit;
  fit.model = model;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;

  std::vector<double> xs, ys;
  bool dropped_nonpositive = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i], v = values[i];
    if (t < window_lo || t > window_hi) continue;
    if (!(v > 0.0) || (model == RateModel::power_law_in_t && !(t > 0.0))) {
      dropped_nonpositive = true;
      continue;
    }
    xs.push_back(model == RateModel::power_law_in_t ? std::log(t) : t);
    ys.push_back(std::log(v));
  }
  if (dropped_nonpositive)
    fit.warning = "non-positive samples dropped; fit window effectively shrunk";
  if (static_cast<int>(xs.size()) < min_samples)
    throw InvalidSpecError("fit_rate: fewer than " + std::to_string(min_samples) +
                           " usable samples in window");
  fit.n_used = static_cast<int>(xs.size());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double n = static_cast<double>(xs.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidSpecError("fit_rate: degenerate abscissae");
  fit.rate = (n * sxy - sx * sy) / denom;
  fit.log_amplitude = (sy - fit.rate * sx) / n;

  double ss_res = 0, ss_tot = 0;
  const double ymean = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pred = fit.log_amplitude + fit.rate * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Default window: drop the first and last 10% of samples (transients and
// saturation), then fit over what remains.
inline RateFit fit_rate(const std::vector<double> &times, const std::vector<double> &values,
                        RateModel model, int min_samples = 10) {
  if (times.size() < 2) throw InvalidSpecError("fit_rate: too few samples");
  const std::size_t drop = times.size() / 10;
  const double lo = times[drop];
  const double hi = times[times.size() - 1 - drop];
  return fit_rate(times, values, model, lo, hi, min_samples);
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

// d_W(rho, delta_0) computed in Lagrangian coordinates: the L2 norm of Phi
// against the reference measure.  Piecewise-linear Phi is integrated exactly.
inline double dirac_distance(const Diffeo1D &phi, double rho_ref = 1.0) {
  double s = 0.0;
  for (int c = 0; c < phi.grid.n_cells; ++c) {
    const double a = phi.phi[c], b = phi.phi[c + 1];
    s += rho_ref * phi.grid.dx * (a * a + a * b + b * b) / 3.0;
  }
  return std::sqrt(s);
}

inline double dirac_distance(const Diffeo2D &phi, double rho_ref,
                             const Eigen::VectorXd *elem_ref = nullptr) {
  return mass_norm_2d(*phi.mesh, phi.values, rho_ref, elem_ref);
}

// ---------------------------------------------------------------------------
// Profile errors
// ---------------------------------------------------------------------------

enum class ErrorNorm { L1, L2, sup_interior };

inline double profile_error(const DensityField1D &field, const ReferenceProfile &ref,
                            ErrorNorm norm, double interior_margin = 0.05) {
  if (field.n_cells() == 0) throw InvalidSpecError("profile_error: empty field");
  const double olo = std::max(field.edges.front(), ref.support_lo);
  const double ohi = std::min(field.edges.back(), ref.support_hi);
  if (!(ohi > olo)) throw InvalidSpecError("profile_error: supports do not overlap");

  if (norm == ErrorNorm::sup_interior) {
    const double margin = interior_margin * (ohi - olo);
    double sup = 0.0;
    bool any = false;
    for (int c = 0; c < field.n_cells(); ++c) {
      const double x = field.midpoint(c);
      if (x < olo + margin || x > ohi - margin) continue;
      sup = std::max(sup, std::abs(field.values[c] - ref.density(x)));
      any = true;
    }
    if (!any) throw InvalidSpecError("profile_error: no samples in the interior window");
    return sup;
  }

  double acc = 0.0;
  for (int c = 0; c < field.n_cells(); ++c) {
    const double w = field.edges[c + 1] - field.edges[c];
    const double d = field.values[c] - ref.density(field.midpoint(c));
    acc += norm == ErrorNorm::L1 ? w * std::abs(d) : w * d * d;
  }
  return norm == ErrorNorm::L1 ? acc : std::sqrt(acc);
}

// 2D variant against a radial profile: sampled at deformed vertices with
// lumped deformed-area weights.
inline double profile_error_radial(const DensityField2D &field, const ReferenceProfile &ref,
                                   ErrorNorm norm) {
  const TriMesh &mesh = *field.mesh;
  std::vector<double> lumped(mesh.n_vertices(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto &tri = mesh.triangles[t];
    Eigen::Vector2d p0 = field.positions.segment<2>(2 * tri[0]);
    Eigen::Vector2d p1 = field.positions.segment<2>(2 * tri[1]);
    Eigen::Vector2d p2 = field.positions.segment<2>(2 * tri[2]);
    const double area = 0.5 * std::abs((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                                       (p2.x() - p0.x()) * (p1.y() - p0.y()));
    for (int a = 0; a < 3; ++a) lumped[tri[a]] += area / 3.0;
  }
  double acc = 0.0, sup = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const double r = field.positions.segment<2>(2 * v).norm();
    const double d = field.values[v] - ref.density(r);
    acc += norm == ErrorNorm::L1 ? lumped[v] * std::abs(d) : lumped[v] * d * d;
    sup = std::max(sup, std::abs(d));
  }
  if (norm == ErrorNorm::sup_interior) return sup;
  return norm == ErrorNorm::L1 ? acc : std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Blow-up comparison
// ---------------------------------------------------------------------------

// Estimate of the center density from the map: reciprocal of the minimum
// 3-cell-median slope near the given mass coordinate.
inline double estimate_center_density(const Diffeo1D &phi, double center_mass,
                                      int window_halfwidth_cells = -1) {
  const int n = phi.grid.n_cells;
  if (window_halfwidth_cells < 0) window_halfwidth_cells = std::max(3, n / 20);
  int cc = static_cast<int>(std::floor(center_mass / phi.grid.dx));
  cc = std::clamp(cc, 1, n - 2);
  double min_slope = 1e300;
  for (int c = std::max(1, cc - window_halfwidth_cells);
       c <= std::min(n - 2, cc + window_halfwidth_cells); ++c) {
    double a = phi.slope(c - 1), b = phi.slope(c), d = phi.slope(c + 1);
    // median of three
    const double med = std::max(std::min(a, b), std::min(std::max(a, b), d));
    min_slope = std::min(min_slope, med);
  }
  if (!(min_slope > 0.0)) throw DegenerateMapError("estimate_center_density: non-positive slope");
  return 1.0 / min_slope;
}

struct BlowupComparison {
  double l2_error = 0.0;
  double gamma = 0.0;
  double L = 0.0;
  double window_lo = 0.0, window_hi = 0.0; // in mass coordinates
  int n_nodes = 0;
};

// Compare Phi against the dilated pseudo-inverse of the critical HV profile:
//   Psi(m) = gamma^{-1/2} tan((m - M/2)/2),
// i.e. the CDF-inverse of 2 sqrt(gamma)/(1+gamma x^2) with its critical mass
// 2 pi centered on the grid midpoint.  gamma = (rho_center/2)^2 matches the
// profile height 2 sqrt(gamma); L = 1/rho_center.  The L2 error is taken over
// the mass window whose image under Psi is (-L, L).
inline BlowupComparison blowup_compare(const Diffeo1D &phi, double center_density) {
  if (!(center_density > 0.0))
    throw InvalidSpecError("blowup_compare: center density must be positive");
  if (!phi.monotone()) throw DegenerateMapError("blowup_compare: map not monotone");

  BlowupComparison out;
  out.gamma = 0.25 * center_density * center_density;
  out.L = 1.0 / center_density;
  const double M = phi.grid.mass;
  const double half_window = 2.0 * std::atan(std::sqrt(out.gamma) * out.L);
  out.window_lo = M / 2.0 - half_window;
  out.window_hi = M / 2.0 + half_window;

  const double sg = std::sqrt(out.gamma);
  auto psi = [M, sg](double mcoord) { return std::tan(0.5 * (mcoord - M / 2.0)) / sg; };

  // trapezoid over the grid nodes that fall inside the window
  double acc = 0.0;
  int count = 0;
  const int n = phi.grid.n_cells;
  for (int c = 0; c < n; ++c) {
    const double m0 = phi.grid.node(c), m1 = phi.grid.node(c + 1);
    if (m1 < out.window_lo || m0 > out.window_hi) continue;
    const double d0 = phi.phi[c] - psi(m0);
    const double d1 = phi.phi[c + 1] - psi(m1);
    acc += 0.5 * phi.grid.dx * (d0 * d0 + d1 * d1);
    ++count;
  }
  if (count == 0) throw InvalidSpecError("blowup_compare: comparison window contains no cells");
  out.l2_error = std::sqrt(acc);
  out.n_nodes = count + 1;
  return out;
}

// ---------------------------------------------------------------------------
// Support statistics
// ---------------------------------------------------------------------------

struct SupportStats2D {
  double mean_radius = 0.0;
  double radial_spread = 0.0;
  double interior_mass = 0.0;
};

namespace detail {

inline std::vector<double> lumped_reference_mass(const TriMesh &mesh, double rho_ref,
                                                 const Eigen::VectorXd *elem_ref) {
  std::vector<double> mu(mesh.n_vertices(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double re = elem_ref ? (*elem_ref)[t] : rho_ref;
    for (int a = 0; a < 3; ++a) mu[mesh.triangles[t][a]] += re * mesh.area[t] / 3.0;
  }
  return mu;
}

} // namespace detail

// Mass-weighted mean and spread of |Phi(v)| over interior vertices, weights
// from the lumped reference measure.
inline SupportStats2D support_statistics(const Diffeo2D &phi, double rho_ref,
                                         const Eigen::VectorXd *elem_ref = nullptr) {
  const TriMesh &mesh = *phi.mesh;
  const auto mu = detail::lumped_reference_mass(mesh, rho_ref, elem_ref);
  SupportStats2D st;
  double wsum = 0.0, rsum = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (mesh.is_boundary[v]) continue;
    wsum += mu[v];
    rsum += mu[v] * phi.pos(v).norm();
  }
  if (wsum == 0.0) throw InvalidSpecError("support_statistics: no interior vertices");
  st.interior_mass = wsum;
  st.mean_radius = rsum / wsum;
  double var = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (mesh.is_boundary[v]) continue;
    const double d = phi.pos(v).norm() - st.mean_radius;
    var += mu[v] * d * d;
  }
  st.radial_spread = std::sqrt(var / wsum);
  return st;
}

// Fraction of the interior reference mass whose image radius lies in [lo, hi].
inline double mass_fraction_in_radial_band(const Diffeo2D &phi, double rho_ref, double lo,
                                           double hi, const Eigen::VectorXd *elem_ref = nullptr) {
  const TriMesh &mesh = *phi.mesh;
  const auto mu = detail::lumped_reference_mass(mesh, rho_ref, elem_ref);
  double wsum = 0.0, in = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (mesh.is_boundary[v]) continue;
    wsum += mu[v];
    const double r = phi.pos(v).norm();
    if (r >= lo && r <= hi) in += mu[v];
  }
  if (wsum == 0.0) throw InvalidSpecError("mass_fraction_in_radial_band: no interior vertices");
  return in / wsum;
}

struct SupportComponent {
  double lo = 0.0, hi = 0.0;
  double mass = 0.0;
};

// Maximal intervals where the piecewise-constant density exceeds `threshold`.
inline std::vector<SupportComponent> support_components(const DensityField1D &field,
                                                        double threshold) {
  std::vector<SupportComponent> comps;
  bool open = false;
  for (int c = 0; c < field.n_cells(); ++c) {
    const double w = field.edges[c + 1] - field.edges[c];
    if (field.values[c] > threshold) {
      if (!open) {
        comps.push_back({field.edges[c], field.edges[c + 1], 0.0});
        open = true;
      }
      comps.back().hi = field.edges[c + 1];
      comps.back().mass += field.values[c] * w;
    } else {
      open = false;
    }
  }
  return comps;
}

inline int connected_support_count(const DensityField1D &field, double threshold) {
  return static_cast<int>(support_components(field, threshold).size());
}

} // namespace lagflow
