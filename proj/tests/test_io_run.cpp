#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "lagflow/io.hpp"
#include "lagflow/run.hpp"

using namespace lagflow;
using namespace lagflow::io;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string &leaf) {
  fs::path d = fs::temp_directory_path() / "lagflow_test" / leaf;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int count_lines(const std::string &text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

RunConfig config_from(const std::string &text) {
  auto parsed = config::parse_toml_subset(text);
  std::vector<std::string> errors;
  auto rc = build_run_config(parsed, errors);
  REQUIRE(errors.empty());
  return rc;
}

} // namespace

TEST_CASE("number formatting and hashing", "[io]") {
  CHECK(g17(1.0) == "1");
  CHECK(g17(0.0) == "0");
  // Round-trip: parsing the printed form recovers the exact double.
  for (double v : {0.1, 1.0 / 3.0, 1e-30, 3.0e17, -2.718281828459045}) {
    const double back = std::strtod(g17(v).c_str(), nullptr);
    CHECK(back == v);
  }

  // FNV-1a reference vectors.
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xffffffffffffffffull).size() == 16);

  // File hash agrees with the in-memory hash of the same bytes.
  const fs::path dir = fresh_dir("hash");
  write_text(dir / "blob.txt", "lagflow\n0.1\n");
  CHECK(fnv1a64_file(dir / "blob.txt") == fnv1a64("lagflow\n0.1\n"));
}

TEST_CASE("text and csv writers", "[io]") {
  const fs::path dir = fresh_dir("csv");

  // Parent directories are created on demand.
  const fs::path nested = dir / "a" / "b" / "c.txt";
  write_text(nested, "hello");
  CHECK(slurp(nested) == "hello");

  std::vector<std::string> header = {"t", "E"};
  std::vector<std::vector<double>> rows = {{0.0, 1.5}, {0.1, 1.25}};
  write_csv(dir / "one.csv", header, rows);
  write_csv(dir / "two.csv", header, rows);
  const std::string a = slurp(dir / "one.csv");
  CHECK(a == slurp(dir / "two.csv")); // deterministic bytes
  CHECK(a.substr(0, 4) == "t,E\n");
  CHECK(count_lines(a) == 3);
  CHECK(a.find("1.5") != std::string::npos);

  Grid1D g = build_grid_1d(1.0, 4);
  Diffeo1D phi = make_identity_like_1d(g, 0.0, 1.0);
  write_phi_csv_1d(dir / "phi.csv", phi, 0.5);
  const std::string p = slurp(dir / "phi.csv");
  CHECK(p.rfind("# t = 0.5\nm,phi\n", 0) == 0);
  CHECK(count_lines(p) == 2 + 5); // comment + header + 5 nodes
}

TEST_CASE("vtk writer structure", "[io]") {
  const fs::path dir = fresh_dir("vtk");
  TriMesh mesh = build_disk_mesh(1.0, 2);
  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();

  Diffeo2D id = make_identity_2d(mesh);
  VtkPointData vec{"phi", std::vector<double>(id.values.data(), id.values.data() + 2 * nv), true};
  VtkPointData sca{"rho", std::vector<double>(static_cast<std::size_t>(nv), 2.0), false};
  write_vtk_2d(dir / "m.vtk", mesh, id.values, "lagflow t=0 rho_ref=1 mass=3.14", {vec, sca});

  const std::string out = slurp(dir / "m.vtk");
  CHECK(out.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(out.find("lagflow t=0 rho_ref=1 mass=3.14\n") != std::string::npos);
  CHECK(out.find("ASCII\n") != std::string::npos);
  CHECK(out.find("DATASET UNSTRUCTURED_GRID\n") != std::string::npos);
  CHECK(out.find("POINTS " + std::to_string(nv) + " double\n") != std::string::npos);
  CHECK(out.find("CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt) + "\n") !=
        std::string::npos);
  CHECK(out.find("CELL_TYPES " + std::to_string(nt) + "\n") != std::string::npos);
  CHECK(out.find("\n5\n") != std::string::npos); // VTK_TRIANGLE
  CHECK(out.find("POINT_DATA " + std::to_string(nv) + "\n") != std::string::npos);
  CHECK(out.find("VECTORS phi double\n") != std::string::npos);
  CHECK(out.find("SCALARS rho double 1\nLOOKUP_TABLE default\n") != std::string::npos);

  // Every POINTS line carries a zero z coordinate.
  std::istringstream iss(out);
  std::string line;
  while (std::getline(iss, line) && line.rfind("POINTS", 0) != 0) {
  }
  for (int i = 0; i < nv; ++i) {
    REQUIRE(std::getline(iss, line));
    CHECK(line.size() >= 2);
    CHECK(line.substr(line.size() - 2) == " 0");
  }
}

static const char *kHorizon1D = R"(dimension = 1

[domain]
lo = -2.0
hi = 2.0

[mesh]
n_cells = 60

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.4

[energy.internal]
kind = "log_entropy"

[energy.external]
kind = "harmonic"

[solver]
dt = 1.0e-2

[stop]
rule = "horizon"
n_steps = 50
)";

TEST_CASE("1d run end to end with outputs", "[run]") {
  const fs::path dir = fresh_dir("run1d");
  RunConfig rc = config_from(kHorizon1D);
  rc.output_dir = dir.string();

  RunOptions opt;
  RunResult res = execute_run(rc, opt);

  CHECK(res.termination == Termination::horizon);
  CHECK(res.steps_accepted == 50);
  CHECK(res.t_end == Approx(0.5).margin(1e-12));
  CHECK(res.times.size() == 51);
  CHECK(res.energies.size() == 51);
  CHECK(res.sup_density.size() == 51);
  CHECK(res.step_diags.size() == 50);
  CHECK(res.energy_nonincreasing);
  CHECK(res.worst_energy_increase <= 0.0 + 1e-12);

  // Snapshot schedule: step 0, every 10th, and the forced final step.
  REQUIRE(res.snapshots_1d.size() == 6);
  std::vector<int> steps;
  for (const auto &s : res.snapshots_1d) steps.push_back(s.step);
  CHECK(steps == std::vector<int>{0, 10, 20, 30, 40, 50});

  CHECK(res.phi_final_1d.monotone());
  CHECK(res.rho_final_1d.mass == Approx(1.0).margin(1e-12));
  CHECK(res.pushforward.l1_residual < 0.05);

  // File inventory.
  for (const char *name : {"config.toml", "energy.csv", "steps.csv", "manifest.json",
                           "rho_final.csv", "phi_000000.csv", "phi_000050.csv"})
    CHECK(fs::exists(dir / name));
  CHECK(slurp(dir / "config.toml") == res.cfg.source_text);
  CHECK(count_lines(slurp(dir / "energy.csv")) == 52); // header + 51 rows
  CHECK(count_lines(slurp(dir / "steps.csv")) == 51);  // header + 50 rows

  // Manifest: schema plus per-file checksums that must match the bytes on disk.
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["version"] == version_string);
  CHECK(j["termination"] == "horizon");
  CHECK(j["dimension"] == 1);
  CHECK(j["mass"].get<double>() == Approx(1.0));
  CHECK(j["steps_accepted"] == 50);
  CHECK(j["energy_nonincreasing"] == true);
  CHECK(j["config_echo"] == res.cfg.source_text);
  REQUIRE(j.contains("files"));
  CHECK(j["files"].size() >= 7);
  for (const auto &f : j["files"]) {
    const fs::path p = dir / f["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) == f["bytes"].get<std::uint64_t>());
    CHECK(hex64(fnv1a64_file(p)) == f["fnv1a64"].get<std::string>());
  }

  // Same config, second run: identical energy.csv bytes.
  const fs::path dir2 = fresh_dir("run1d_repeat");
  RunConfig rc2 = config_from(kHorizon1D);
  rc2.output_dir = dir2.string();
  execute_run(rc2, opt);
  CHECK(slurp(dir / "energy.csv") == slurp(dir2 / "energy.csv"));
}

TEST_CASE("steady-state stop rule", "[run]") {
  // Gaussian relaxing in a harmonic well reaches the steady tolerance quickly.
  std::string text = kHorizon1D;
  const auto pos = text.find("rule = \"horizon\"\nn_steps = 50");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("rule = \"horizon\"\nn_steps = 50").size(),
               "rule = \"steady\"\nsteady_tol = 1.0e-5\nsteady_extra_steps = 40\nmax_steps = 20000");

  RunConfig rc = config_from(text);
  rc.output_dir = fresh_dir("steady").string();

  RunOptions opt;
  opt.write_outputs = false;
  RunResult res = execute_run(rc, opt);

  CHECK(res.termination == Termination::steady_state);
  CHECK(res.steady_detect_time > 0.0);
  CHECK(res.t_end == Approx(res.steady_detect_time + 40 * rc.dt).margin(1e-9));
  CHECK(res.energy_nonincreasing);
  // No files were requested.
  CHECK(!fs::exists(fs::path(rc.output_dir) / "manifest.json"));
}

static const char *kSmall2D = R"(dimension = 2

[domain]
shape = "disk"

[mesh]
n_rings = 4

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3
method = "transport"

[energy.external]
kind = "harmonic"

[solver]
dt = 1.0e-2

[stop]
rule = "horizon"
n_steps = 5
)";

TEST_CASE("2d run end to end with outputs", "[run]") {
  const fs::path dir = fresh_dir("run2d");
  RunConfig rc = config_from(kSmall2D);
  rc.output_dir = dir.string();

  RunOptions opt;
  RunResult res = execute_run(rc, opt);

  CHECK(res.termination == Termination::horizon);
  CHECK(res.steps_accepted == 5);
  REQUIRE(res.mesh);
  CHECK(res.rho_ref == Approx(1.0 / res.mesh->total_area));
  CHECK(res.heat_equilibration_time > 0.0);
  // Coarse-mesh smoke bound; the quantitative pushforward claims live elsewhere.
  CHECK(res.pushforward.l1_residual < 0.5);
  REQUIRE(res.snapshots_2d.size() == 6); // snapshot_every defaults to 1 in 2d
  CHECK(orientation_ok_2d(res.phi_final_2d));
  CHECK(res.rho_final_2d.mass == Approx(1.0).margin(0.02));

  for (const char *name : {"config.toml", "energy.csv", "steps.csv", "manifest.json", "mesh.vtk",
                           "phi_000000.vtk", "phi_000005.vtk", "rho_final.vtk"})
    CHECK(fs::exists(dir / name));

  nlohmann::json j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["dimension"] == 2);
  CHECK(j["termination"] == "horizon");
  CHECK(j["reference_density"].get<double>() == Approx(res.rho_ref));

  // The snapshot title carries enough metadata to reconstruct later.
  const std::string snap = slurp(dir / "phi_000005.vtk");
  CHECK(snap.find("rho_ref=") != std::string::npos);
  CHECK(snap.find("VECTORS phi double") != std::string::npos);
  const std::string rho = slurp(dir / "rho_final.vtk");
  CHECK(rho.find("SCALARS rho double 1") != std::string::npos);
}

#ifdef LAGFLOW_CLI_PATH
namespace {
int run_cli(const std::string &args) {
  const std::string cmd = std::string(LAGFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}
} // namespace

TEST_CASE("cli exit codes", "[cli]") {
  const fs::path dir = fresh_dir("cli");
  write_text(dir / "good.toml", kHorizon1D);
  write_text(dir / "bad.toml", "dimension = 3\n");

  CHECK(run_cli("recipes") == 0);
  CHECK(run_cli("validate " + (dir / "good.toml").string()) == 0);
  CHECK(run_cli("validate " + (dir / "bad.toml").string()) == 2);
  CHECK(run_cli("validate " + (dir / "missing.toml").string()) != 0);

  // A short run through the CLI, then post-processing on its outputs.
  const fs::path out1 = dir / "out1";
  CHECK(run_cli("run " + (dir / "good.toml").string() + " --quiet --output-dir " + out1.string()) ==
        0);
  CHECK(fs::exists(out1 / "manifest.json"));
  // E_total is negative for entropic energies, so fit the positive rho_max column.
  CHECK(run_cli("rates " + (out1 / "energy.csv").string() +
                " --column rho_max --model exponential") == 0);

  const fs::path out2 = dir / "out2";
  write_text(dir / "disk.toml", kSmall2D);
  CHECK(run_cli("run " + (dir / "disk.toml").string() + " --quiet --output-dir " + out2.string()) ==
        0);
  CHECK(run_cli("reconstruct " + (out2 / "phi_000005.vtk").string()) == 0);
  CHECK(fs::exists(out2 / "rho_recon.vtk"));

  CHECK(run_cli("run " + (dir / "nonexistent.toml").string()) != 0);
}
#endif
