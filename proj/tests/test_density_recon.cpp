#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lagflow/density_recon.hpp"
#include "lagflow/init_map.hpp"
#include "helpers.hpp"

using namespace lagflow;
using Catch::Approx;

TEST_CASE("1d reconstruction", "[recon1d]") {
  SECTION("linear map gives a constant density and exact mass") {
    const Grid1D g = build_grid_1d(1.0, 20);
    Diffeo1D phi = make_identity_like_1d(g, 0.0, 2.0); // slope 2 everywhere
    const DensityField1D f = reconstruct_1d(phi);
    REQUIRE(f.n_cells() == 20);
    for (int c = 0; c < f.n_cells(); ++c) CHECK(f.values[c] == Approx(0.5).margin(1e-14));
    CHECK(f.edges.front() == 0.0);
    CHECK(f.edges.back() == 2.0);
    CHECK(f.mass == Approx(1.0).margin(1e-13));
    CHECK(density_at_1d(f, 1.3) == Approx(0.5));
    CHECK(density_at_1d(f, -0.1) == 0.0);
    CHECK(density_at_1d(f, 2.5) == 0.0);
  }

  SECTION("sqrt map recovers rho = 2x, mass telescopes exactly") {
    InitialDensity1D rho0;
    rho0.mass = 1.0;
    rho0.support_lo = 0.0;
    rho0.support_hi = 1.0;
    rho0.rho = [](double x) { return 2.0 * x; };
    const Grid1D g = build_grid_1d(1.0, 100);
    const Diffeo1D phi = init_diffeo_1d(rho0, g, 0.0, 1.0);
    const DensityField1D f = reconstruct_1d(phi);
    CHECK(f.mass == Approx(1.0).margin(1e-12));
    CHECK(density_at_1d(f, 0.5) == Approx(1.0).margin(0.03));
    CHECK(density_at_1d(f, 0.9) == Approx(1.8).margin(0.03));
  }

  SECTION("reference density scales the values") {
    const Grid1D g = build_grid_1d(2.0, 8);
    Diffeo1D phi = make_identity_like_1d(g, 0.0, 1.0); // slope 1/2
    const DensityField1D f = reconstruct_1d(phi, 3.0);
    CHECK(f.values[4] == Approx(6.0));
    CHECK(f.mass == Approx(6.0).margin(1e-13)); // 3 * grid mass / ... = rho * length
  }

  SECTION("non-monotone maps are rejected") {
    const Grid1D g = build_grid_1d(1.0, 4);
    Diffeo1D phi = make_identity_like_1d(g, 0.0, 1.0);
    phi.phi[2] = phi.phi[3] + 0.1;
    CHECK_THROWS_AS(reconstruct_1d(phi), DegenerateMapError);
  }
}

TEST_CASE("2d reconstruction on affine maps is exact", "[recon2d]") {
  const TriMesh mesh = build_rect_mesh(0.0, 0.0, 1.0, 1.0, 4, 4);

  SECTION("identity") {
    const Diffeo2D id = make_identity_2d(mesh);
    const DensityField2D f = reconstruct_2d(id, 1.0);
    for (int v = 0; v < mesh.n_vertices(); ++v) CHECK(f.values[v] == Approx(1.0).margin(1e-10));
    CHECK(f.mass == Approx(1.0).margin(1e-12));
    CHECK(f.negatives_clamped == 0);
    CHECK(f.warning.empty());
  }

  SECTION("uniform dilation by 2") {
    Diffeo2D phi = make_identity_2d(mesh);
    phi.values *= 2.0;
    const DensityField2D f = reconstruct_2d(phi, 1.0);
    for (int v = 0; v < mesh.n_vertices(); ++v) CHECK(f.values[v] == Approx(0.25).margin(1e-10));
    CHECK(f.mass == Approx(1.0).margin(1e-12)); // mass rides along with the map
    CHECK(f.min_value == Approx(0.25).margin(1e-10));
  }

  SECTION("inverted elements are rejected") {
    Diffeo2D phi = make_identity_2d(mesh);
    phi.set_pos(6, Eigen::Vector2d(3.0, 3.0)); // interior vertex thrown far away
    CHECK_THROWS_AS(reconstruct_2d(phi, 1.0), DegenerateMapError);
  }
}

TEST_CASE("screening parameter controls the smoothing error linearly", "[recon2d]") {
  const TriMesh mesh = build_disk_mesh(1.0, 6);
  Diffeo2D phi = make_identity_2d(mesh);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const Eigen::Vector2d x = mesh.vertices[v];
    phi.set_pos(v, x * (1.0 + 0.2 * x.squaredNorm()));
  }
  const double rho_ref = 1.0 / mesh.total_area;

  ReconConfig2D ref_cfg;
  ref_cfg.epsilon = 1e-9;
  const DensityField2D f_ref = reconstruct_2d(phi, rho_ref, ref_cfg);

  double err[3];
  const double eps[3] = {1e-2, 1e-3, 1e-4};
  for (int k = 0; k < 3; ++k) {
    ReconConfig2D cfg;
    cfg.epsilon = eps[k];
    const DensityField2D f = reconstruct_2d(phi, rho_ref, cfg);
    CHECK(f.negatives_clamped == 0);
    err[k] = (f.values - f_ref.values).lpNorm<Eigen::Infinity>();
    // the screened solve conserves mass exactly (K annihilates constants)
    CHECK(mass_check(f.mass, 1.0) < 1e-10);
  }
  CHECK(err[0] / err[1] == Approx(10.0).margin(5.0));
  CHECK(err[1] / err[2] == Approx(10.0).margin(5.0));
}

TEST_CASE("mass_check is a relative defect", "[recon2d]") {
  CHECK(mass_check(1.02, 1.0) == Approx(0.02));
  CHECK(mass_check(0.99, 1.0) == Approx(0.01));
}
