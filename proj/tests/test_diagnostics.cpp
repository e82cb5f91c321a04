#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lagflow/density_recon.hpp"
#include "lagflow/diagnostics.hpp"
#include "helpers.hpp"

using namespace lagflow;
using Catch::Approx;

TEST_CASE("barenblatt profile", "[profiles]") {
  SECTION("m = 2: parabola carrying the requested mass") {
    const ReferenceProfile p = barenblatt_profile(2.0, 0.5, 2.0);
    const double q = oracle::integrate(p.density, p.support_lo, p.support_hi, 128);
    CHECK(q == Approx(2.0).margin(1e-12)); // integrand is a polynomial
    CHECK(p.density(p.support_hi) == 0.0);
    CHECK(p.density(0.4) == Approx(p.density(-0.4)).margin(1e-15));
  }

  SECTION("m = 4 mass normalization") {
    const ReferenceProfile p = barenblatt_profile(4.0, 0.02, 1.0);
    const double q = oracle::integrate(p.density, p.support_lo, p.support_hi, 512);
    CHECK(q == Approx(1.0).margin(1e-6));
  }

  SECTION("front grows like t^{1/(m+1)}") {
    CHECK(barenblatt_front(2.0, 1.0, 8.0) / barenblatt_front(2.0, 1.0, 1.0) ==
          Approx(2.0).epsilon(1e-12));
    CHECK(barenblatt_front(3.0, 1.0, 16.0) / barenblatt_front(3.0, 1.0, 1.0) ==
          Approx(2.0).epsilon(1e-12));
  }

  SECTION("bad arguments throw") {
    CHECK_THROWS_AS(barenblatt_profile(1.0, 1.0, 1.0), InvalidSpecError);
    CHECK_THROWS_AS(barenblatt_profile(2.0, 0.0, 1.0), InvalidSpecError);
    CHECK_THROWS_AS(barenblatt_profile(2.0, 1.0, -1.0), InvalidSpecError);
  }
}

TEST_CASE("Fokker-Planck steady profiles", "[profiles]") {
  ExternalPotentialSpec harm;
  harm.kind = ExternalKind::harmonic;

  SECTION("log entropy gives the Gibbs measure") {
    InternalEnergySpec ent;
    ent.kind = InternalKind::log_entropy;
    const ReferenceProfile p = fp_steady_profile(ent, harm, -8.0, 8.0, 1.5);
    const double q = oracle::integrate(p.density, -8.0, 8.0, 128);
    CHECK(q == Approx(1.5).margin(1e-8));
    CHECK(p.density(1.0) / p.density(0.0) == Approx(std::exp(-0.5)).epsilon(1e-10));
    CHECK(p.support_lo == -8.0);
    CHECK(p.support_hi == 8.0);
  }

  SECTION("m = 2 gives a truncated parabola with computable constants") {
    // U'(rho) = 2 rho for both (m=2, nu=2, over_m) and (m=2, nu=1, over_m_minus_1);
    // mass 1 then forces 2C = 3^{2/3}.
    InternalEnergySpec a;
    a.kind = InternalKind::power;
    a.m = 2.0;
    a.nu = 2.0;
    a.normalization = PowerNormalization::over_m;
    InternalEnergySpec b;
    b.kind = InternalKind::power;
    b.m = 2.0;
    b.nu = 1.0;
    b.normalization = PowerNormalization::over_m_minus_1;

    const double C_exact = 0.5 * std::pow(3.0, 2.0 / 3.0);
    for (const auto &spec : {a, b}) {
      const ReferenceProfile p = fp_steady_profile(spec, harm, -3.0, 3.0, 1.0);
      CHECK(p.c == Approx(C_exact).margin(1e-9));
      CHECK(p.support_hi == Approx(std::pow(3.0, 1.0 / 3.0)).margin(1e-8));
      CHECK(p.support_lo == Approx(-p.support_hi).margin(1e-8));
      CHECK(p.density(0.0) == Approx(0.5 * C_exact).margin(1e-9));
      const double q = oracle::integrate(p.density, -3.0, 3.0, 256);
      CHECK(q == Approx(1.0).margin(1e-6));
    }
  }

  SECTION("unsupported internal energies throw") {
    InternalEnergySpec none;
    CHECK_THROWS_AS(fp_steady_profile(none, harm, -1.0, 1.0, 1.0), InvalidSpecError);
  }
}

TEST_CASE("aggregation and mill profiles", "[profiles]") {
  SECTION("constant interval") {
    const ReferenceProfile p = constant_interval_profile(4.0);
    CHECK(p.density(0.3) == 2.0);
    CHECK(p.density(-0.999) == 2.0);
    CHECK(p.density(1.5) == 0.0);
    CHECK(p.support_lo == -1.0);
    CHECK(p.support_hi == 1.0);
  }

  SECTION("semicircle") {
    const ReferenceProfile p = semicircle_profile(1.0);
    CHECK(p.density(0.0) == Approx(std::sqrt(2.0) / M_PI).epsilon(1e-14));
    const double q = oracle::integrate(p.density, p.support_lo, p.support_hi, 512);
    CHECK(q == Approx(1.0).margin(1e-4)); // sqrt edges converge slowly
  }

  SECTION("mill annulus radii and height") {
    const ReferenceProfile p = mill_annulus_profile(1.0, 4.0);
    CHECK(p.support_lo == Approx(0.5).epsilon(1e-14));
    const double lc = 1.0 / (2.0 * M_PI);
    CHECK(p.support_hi == Approx(std::sqrt(0.25 + lc)).epsilon(1e-14));
    CHECK(p.density(0.6) == Approx(1.0 / (M_PI * lc)).epsilon(1e-14));
    CHECK(p.density(0.49) == 0.0);
    CHECK(p.density(0.7) == 0.0);
    // planar mass of the annulus: pi h (Ro^2 - Ri^2) = mass
    CHECK(M_PI * p.density(0.6) * (p.support_hi * p.support_hi - p.support_lo * p.support_lo) ==
          Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(mill_annulus_profile(1.0, 4.0, 1.0, 0.0), InvalidSpecError);
  }

  SECTION("blow-up profile") {
    const ReferenceProfile p = hv_blowup_profile(9.0);
    CHECK(p.mass == Approx(2.0 * M_PI));
    CHECK(p.density(0.0) == Approx(6.0));
    CHECK(p.density(1.0 / 3.0) == Approx(3.0)); // half height at x = 1/sqrt(gamma)
  }
}

TEST_CASE("rate fitting", "[rates]") {
  std::vector<double> times, power_vals, exp_vals;
  for (int i = 1; i <= 60; ++i) {
    const double t = 0.01 * i;
    times.push_back(t);
    power_vals.push_back(3.0 * std::pow(t, -1.0 / 3.0));
    exp_vals.push_back(2.0 * std::exp(-3.0 * t));
  }

  SECTION("exact laws are recovered to machine precision") {
    const RateFit f1 = fit_rate(times, power_vals, RateModel::power_law_in_t, 0.05, 0.55);
    CHECK(f1.rate == Approx(-1.0 / 3.0).margin(1e-12));
    CHECK(f1.r_squared == Approx(1.0).margin(1e-12));
    CHECK(std::exp(f1.log_amplitude) == Approx(3.0).margin(1e-10));

    const RateFit f2 = fit_rate(times, exp_vals, RateModel::exponential_in_t, 0.05, 0.55);
    CHECK(f2.rate == Approx(-3.0).margin(1e-11));
    CHECK(std::exp(f2.log_amplitude) == Approx(2.0).margin(1e-10));
  }

  SECTION("window selects the sample count") {
    const RateFit f = fit_rate(times, exp_vals, RateModel::exponential_in_t, 0.095, 0.305);
    CHECK(f.n_used == 21); // t = 0.10 .. 0.30 inclusive
    CHECK(f.warning.empty());
  }

  SECTION("default window drops the first and last tenth") {
    const RateFit f = fit_rate(times, exp_vals, RateModel::exponential_in_t);
    CHECK(f.n_used == 60 - 2 * 6);
    CHECK(f.rate == Approx(-3.0).margin(1e-11));
  }

  SECTION("non-positive samples are dropped with a warning") {
    std::vector<double> vals = exp_vals;
    vals[20] = -1.0;
    vals[21] = 0.0;
    const RateFit f = fit_rate(times, vals, RateModel::exponential_in_t, 0.05, 0.55);
    CHECK_FALSE(f.warning.empty());
    CHECK(f.n_used == 51 - 2);
    CHECK(f.rate == Approx(-3.0).margin(1e-10));
  }

  SECTION("too few samples throw") {
    CHECK_THROWS_AS(fit_rate(times, exp_vals, RateModel::exponential_in_t, 0.05, 0.11),
                    InvalidSpecError);
    std::vector<double> short_t(times.begin(), times.begin() + 5);
    std::vector<double> short_v(exp_vals.begin(), exp_vals.begin() + 4);
    CHECK_THROWS_AS(fit_rate(short_t, short_v, RateModel::exponential_in_t, 0.0, 1.0),
                    InvalidSpecError);
  }
}

TEST_CASE("dirac distance", "[distances]") {
  SECTION("1d: exact piecewise-linear integral") {
    const Grid1D g = build_grid_1d(1.0, 40);
    Diffeo1D zero;
    zero.grid = g;
    zero.phi = Eigen::VectorXd::Zero(g.n_nodes());
    CHECK(dirac_distance(zero) == 0.0);

    const Diffeo1D id = make_identity_like_1d(g, 0.0, 1.0);
    CHECK(dirac_distance(id) == Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-14));
    CHECK(dirac_distance(id, 2.0) == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));

    Diffeo1D scaled = id;
    scaled.phi *= 5.0;
    CHECK(dirac_distance(scaled) == Approx(5.0 * dirac_distance(id)).epsilon(1e-14));
  }

  SECTION("2d: identity on the unit disk against uniform mass one") {
    const TriMesh mesh = build_disk_mesh(1.0, 8);
    const Diffeo2D id = make_identity_2d(mesh);
    // int r^2 rho over the disk with rho = 1/pi is 1/2
    CHECK(dirac_distance(id, 1.0 / mesh.total_area) == Approx(std::sqrt(0.5)).epsilon(0.01));
  }
}

TEST_CASE("profile errors", "[distances]") {
  // slope-2 map on [-1,1]: piecewise-constant density 0.5
  const Grid1D g = build_grid_1d(1.0, 50);
  const Diffeo1D phi = make_identity_like_1d(g, -1.0, 1.0);
  const DensityField1D f = reconstruct_1d(phi);

  SECTION("matching profile gives zero error") {
    const ReferenceProfile ref = constant_interval_profile(1.0);
    CHECK(profile_error(f, ref, ErrorNorm::L1) == Approx(0.0).margin(1e-13));
    CHECK(profile_error(f, ref, ErrorNorm::L2) == Approx(0.0).margin(1e-13));
    CHECK(profile_error(f, ref, ErrorNorm::sup_interior) == Approx(0.0).margin(1e-13));
  }

  SECTION("constant offset shows up with the right norm scaling") {
    const ReferenceProfile ref = constant_interval_profile(1.2); // height 0.6
    CHECK(profile_error(f, ref, ErrorNorm::L1) == Approx(0.2).epsilon(1e-12));
    CHECK(profile_error(f, ref, ErrorNorm::L2) == Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(profile_error(f, ref, ErrorNorm::sup_interior) == Approx(0.1).epsilon(1e-12));
  }

  SECTION("disjoint supports throw") {
    const ReferenceProfile ref = constant_interval_profile(1.0, 5.0);
    CHECK_THROWS_AS(profile_error(f, ref, ErrorNorm::L1), InvalidSpecError);
  }

  SECTION("radial variant on a constant field") {
    const TriMesh mesh = build_disk_mesh(1.0, 8);
    const Diffeo2D id = make_identity_2d(mesh);
    DensityField2D field;
    field.mesh = &mesh;
    field.positions = id.values;
    field.values = Eigen::VectorXd::Constant(mesh.n_vertices(), 0.3);

    ReferenceProfile ref;
    ref.kind = ProfileKind::constant_interval;
    ref.mass = 1.0;
    ref.support_lo = 0.0;
    ref.support_hi = 1.0;
    ref.density = [](double) { return 0.3; };
    CHECK(profile_error_radial(field, ref, ErrorNorm::sup_interior) == Approx(0.0).margin(1e-14));

    ref.density = [](double) { return 0.2; };
    CHECK(profile_error_radial(field, ref, ErrorNorm::sup_interior) == Approx(0.1).epsilon(1e-12));
    CHECK(profile_error_radial(field, ref, ErrorNorm::L1) ==
          Approx(0.1 * mesh.total_area).epsilon(1e-10));
  }
}

TEST_CASE("center density estimate and blow-up comparison", "[blowup]") {
  SECTION("linear maps invert exactly") {
    const Grid1D g = build_grid_1d(1.0, 60);
    const Diffeo1D phi = make_identity_like_1d(g, 0.0, 0.25); // slope 1/4
    CHECK(estimate_center_density(phi, 0.5) == Approx(4.0).epsilon(1e-13));
  }

  SECTION("a map equal to the dilated profile inverse scores near zero") {
    const double M = 2.0 * M_PI;
    const Grid1D g = build_grid_1d(M, 2000);
    for (double gamma : {0.5, 1.0, 10.0}) {
      const double sg = std::sqrt(gamma);
      Diffeo1D phi;
      phi.grid = g;
      phi.phi.resize(g.n_nodes());
      for (int i = 0; i <= g.n_cells; ++i)
        phi.phi[i] = std::tan(0.5 * (g.node(i) - M / 2.0)) / sg;
      REQUIRE(phi.monotone());

      const double rho_c = 2.0 * sg; // profile height
      const BlowupComparison cmp = blowup_compare(phi, rho_c);
      CHECK(cmp.gamma == Approx(gamma).epsilon(1e-13));
      CHECK(cmp.L == Approx(1.0 / rho_c).epsilon(1e-13));
      const double half = 2.0 * std::atan(sg / rho_c);
      CHECK(cmp.window_lo == Approx(M / 2.0 - half).margin(1e-12));
      CHECK(cmp.window_hi == Approx(M / 2.0 + half).margin(1e-12));
      CHECK(cmp.l2_error < 1e-10);
      CHECK(cmp.n_nodes > 50);
    }
  }

  SECTION("a mismatched center density scores badly") {
    const double M = 2.0 * M_PI;
    const Grid1D g = build_grid_1d(M, 2000);
    Diffeo1D phi;
    phi.grid = g;
    phi.phi.resize(g.n_nodes());
    for (int i = 0; i <= g.n_cells; ++i) phi.phi[i] = std::tan(0.5 * (g.node(i) - M / 2.0));
    CHECK(blowup_compare(phi, 8.0).l2_error > 0.05);
  }

  SECTION("invalid inputs throw") {
    const Grid1D g = build_grid_1d(1.0, 10);
    Diffeo1D bad = make_identity_like_1d(g, 0.0, 1.0);
    CHECK_THROWS_AS(blowup_compare(bad, -1.0), InvalidSpecError);
    bad.phi[5] = bad.phi[6] + 1.0;
    CHECK_THROWS_AS(blowup_compare(bad, 1.0), DegenerateMapError);
    // the median-of-three slope filter shrugs off a single bad cell
    CHECK(estimate_center_density(bad, 0.55) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("2d support statistics", "[support]") {
  const TriMesh mesh = build_disk_mesh(1.0, 10);
  const double rho_ref = 1.0 / mesh.total_area;

  SECTION("all interior mass on one ring") {
    Diffeo2D phi = make_identity_2d(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      const Eigen::Vector2d x = mesh.vertices[v];
      const double r = x.norm();
      phi.set_pos(v, r > 1e-12 ? Eigen::Vector2d(0.5 * x / r) : Eigen::Vector2d(0.5, 0.0));
    }
    const SupportStats2D st = support_statistics(phi, rho_ref);
    CHECK(st.mean_radius == Approx(0.5).margin(1e-12));
    CHECK(st.radial_spread == Approx(0.0).margin(1e-12));
    CHECK(st.interior_mass > 0.7);
    CHECK(st.interior_mass < 1.0);
    CHECK(mass_fraction_in_radial_band(phi, rho_ref, 0.45, 0.55) == Approx(1.0));
    CHECK(mass_fraction_in_radial_band(phi, rho_ref, 0.6, 0.9) == Approx(0.0));
  }

  SECTION("identity map statistics match the uniform disk") {
    const Diffeo2D id = make_identity_2d(mesh);
    const SupportStats2D st = support_statistics(id, rho_ref);
    // uniform disk: mean radius 2/3, spread sqrt(1/18); boundary exclusion
    // biases both slightly down
    CHECK(st.mean_radius > 0.60);
    CHECK(st.mean_radius < 0.68);
    CHECK(st.radial_spread > 0.19);
    CHECK(st.radial_spread < 0.26);
    const double f_half = mass_fraction_in_radial_band(id, rho_ref, 0.0, 0.5);
    CHECK(f_half > 0.2);
    CHECK(f_half < 0.35);
    CHECK(mass_fraction_in_radial_band(id, rho_ref, 0.0, 1.0) == Approx(1.0));
  }
}

TEST_CASE("1d support components", "[support]") {
  DensityField1D f;
  f.edges = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  f.values = {0.0, 1.0, 1.0, 0.0, 2.0, 0.0};

  const auto comps = support_components(f, 0.5);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].lo == 1.0);
  CHECK(comps[0].hi == 3.0);
  CHECK(comps[0].mass == Approx(2.0));
  CHECK(comps[1].lo == 4.0);
  CHECK(comps[1].hi == 5.0);
  CHECK(comps[1].mass == Approx(2.0));

  CHECK(connected_support_count(f, 1.5) == 1);
  CHECK(connected_support_count(f, 3.0) == 0);
  CHECK(connected_support_count(f, -1.0) == 1); // zeros count too at negative threshold
}
