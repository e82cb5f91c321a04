#include <CLI11.hpp>

#include <array>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <lagflow/lagflow.hpp>

using namespace lagflow;

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// minimal reader for the legacy ASCII VTK files this tool writes
// ---------------------------------------------------------------------------

struct VtkData {
  std::string title;
  std::vector<Eigen::Vector2d> points;
  std::vector<std::array<int, 3>> cells;
  std::map<std::string, std::vector<double>> vectors; // interleaved xy
  std::map<std::string, std::vector<double>> scalars;
};

VtkData read_vtk(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  VtkData v;
  std::string line;
  std::getline(in, line); // version comment
  std::getline(in, v.title);
  std::getline(in, line); // ASCII
  std::getline(in, line); // DATASET
  std::string kw;
  while (in >> kw) {
    if (kw == "POINTS") {
      int n;
      std::string type;
      in >> n >> type;
      v.points.resize(n);
      for (int i = 0; i < n; ++i) {
        double x, y, z;
        in >> x >> y >> z;
        v.points[i] = {x, y};
      }
    } else if (kw == "CELLS") {
      int m, sz;
      in >> m >> sz;
      v.cells.resize(m);
      for (int i = 0; i < m; ++i) {
        int k;
        in >> k;
        if (k != 3) throw std::runtime_error(path + ": only triangle cells are supported");
        in >> v.cells[i][0] >> v.cells[i][1] >> v.cells[i][2];
      }
    } else if (kw == "CELL_TYPES") {
      int m, dummy;
      in >> m;
      for (int i = 0; i < m; ++i) in >> dummy;
    } else if (kw == "POINT_DATA") {
      int n;
      in >> n;
    } else if (kw == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      auto &dst = v.vectors[name];
      dst.resize(2 * v.points.size());
      for (std::size_t i = 0; i < v.points.size(); ++i) {
        double x, y, z;
        in >> x >> y >> z;
        dst[2 * i] = x;
        dst[2 * i + 1] = y;
      }
    } else if (kw == "SCALARS") {
      std::string name, type;
      int comps;
      in >> name >> type >> comps;
      std::string lt, tbl;
      in >> lt >> tbl; // LOOKUP_TABLE default
      auto &dst = v.scalars[name];
      dst.resize(v.points.size());
      for (std::size_t i = 0; i < v.points.size(); ++i) in >> dst[i];
    } else {
      throw std::runtime_error(path + ": unexpected VTK keyword '" + kw + "'");
    }
  }
  return v;
}

double title_number(const std::string &title, const std::string &key) {
  std::istringstream ss(title);
  std::string tok;
  while (ss >> tok)
    if (tok.rfind(key + "=", 0) == 0) return std::stod(tok.substr(key.size() + 1));
  throw std::runtime_error("snapshot title carries no '" + key + "=' entry");
}

// ---------------------------------------------------------------------------
// small CSV reader (header + numeric rows, '#' comment lines skipped)
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("csv has no column '" + name + "'");
  }
};

CsvTable read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto &c : cells) row.push_back(std::stod(c));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::runtime_error(path + ": empty csv");
  return t;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"lagflow: Lagrangian solver for aggregation-diffusion equations"};
  app.require_subcommand(1);

  // run
  auto *run = app.add_subcommand("run", "integrate a configuration (or a named recipe)");
  std::string run_config, run_recipe, run_outdir;
  bool run_quiet = false, run_no_snapshots = false;
  run->add_option("config", run_config, "path to a TOML configuration");
  run->add_option("--recipe", run_recipe, "use a built-in recipe instead of a config file");
  run->add_option("--output-dir", run_outdir, "override the configured output directory");
  run->add_flag("--quiet", run_quiet, "suppress progress output");
  run->add_flag("--no-snapshots", run_no_snapshots,
                "keep and write only initial/final state, diagnostics and manifest");

  // recipes
  auto *recipes = app.add_subcommand("recipes", "list built-in recipes, or emit one as TOML");
  std::string recipes_name;
  recipes->add_option("name", recipes_name, "recipe to emit");

  // validate
  auto *validate = app.add_subcommand("validate", "check a configuration without running it");
  std::string validate_config;
  validate->add_option("config", validate_config, "path to a TOML configuration")->required();

  // reconstruct
  auto *recon = app.add_subcommand(
      "reconstruct", "re-run the 2d density reconstruction on a stored snapshot");
  std::string recon_snap, recon_mesh, recon_out;
  double recon_eps = 1e-2, recon_rho_ref = 0.0;
  bool recon_as_printed = false;
  recon->add_option("snapshot", recon_snap, "phi_*.vtk snapshot file")->required();
  recon->add_option("--mesh", recon_mesh, "reference mesh VTK (default: mesh.vtk next to it)");
  recon->add_option("--epsilon", recon_eps, "smoothing parameter of the projection");
  recon->add_option("--rho-ref", recon_rho_ref,
                    "uniform reference density (default: from the snapshot header)");
  recon->add_flag("--as-printed", recon_as_printed,
                  "use the anti-diffusive sign convention instead of the coercive one");
  recon->add_option("-o,--output", recon_out, "output VTK (default: rho_recon.vtk next to it)");

  // rates
  auto *rates = app.add_subcommand("rates", "least-squares decay-rate fit on a diagnostics csv");
  std::string rates_csv, rates_column = "E_total", rates_model = "power";
  double rates_lo = 0.0, rates_hi = 0.0, rates_offset = 0.0;
  bool rates_offset_final = false;
  rates->add_option("csv", rates_csv, "csv with a 't' column")->required();
  rates->add_option("--column", rates_column, "column to fit (default E_total)");
  rates->add_option("--model", rates_model, "power | exponential")
      ->check(CLI::IsMember({"power", "exponential"}));
  rates->add_option("--window-lo", rates_lo, "fit window start in t");
  rates->add_option("--window-hi", rates_hi, "fit window end in t");
  rates->add_option("--offset", rates_offset, "constant subtracted from the column first");
  rates->add_flag("--offset-final", rates_offset_final,
                  "subtract the last sample (relative-to-steady fits)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (run_config.empty() == run_recipe.empty())
        throw InvalidSpecError("run needs exactly one of: a config path, or --recipe NAME");
      RunConfig cfg =
          run_recipe.empty() ? load_run_config(slurp(run_config)) : recipe_config(run_recipe);
      if (!run_outdir.empty()) cfg.output_dir = run_outdir;
      RunOptions opt;
      opt.keep_snapshots = !run_no_snapshots;
      if (!run_quiet) opt.log = [](const std::string &s) { std::cout << s << "\n"; };
      const RunResult res = execute_run(cfg, opt);
      std::cout << "termination=" << termination_name(res.termination)
                << " t_end=" << io::g17(res.t_end) << " steps=" << res.steps_accepted
                << " outputs=" << cfg.output_dir << "\n";
      if (res.termination == Termination::newton_failure) {
        std::cout << "blow-up time estimate: " << io::g17(res.last_good_time) << "\n";
        return 3;
      }
      return 0;
    }

    if (recipes->parsed()) {
      if (recipes_name.empty()) {
        for (const auto &r : recipe_catalog()) {
          std::cout << r.name;
          for (std::size_t i = r.name.size(); i < 22; ++i) std::cout << ' ';
          std::cout << r.description << "\n";
        }
      } else {
        std::cout << find_recipe(recipes_name).config_text;
      }
      return 0;
    }

    if (validate->parsed()) {
      const auto parsed = config::parse_toml_subset(slurp(validate_config));
      std::vector<std::string> errors;
      build_run_config(parsed, errors);
      if (!errors.empty()) {
        for (const auto &e : errors) std::cerr << validate_config << ": " << e << "\n";
        return 2;
      }
      std::cout << validate_config << ": OK\n";
      return 0;
    }

    if (recon->parsed()) {
      const std::filesystem::path snap_path = recon_snap;
      const VtkData snap = read_vtk(recon_snap);
      if (recon_mesh.empty()) recon_mesh = (snap_path.parent_path() / "mesh.vtk").string();
      const VtkData ref = read_vtk(recon_mesh);
      const TriMesh mesh = build_mesh_from_arrays(ref.points, ref.cells);
      Diffeo2D phi;
      phi.mesh = &mesh;
      phi.values.resize(2 * mesh.n_vertices());
      const auto it = snap.vectors.find("phi");
      if (it != snap.vectors.end()) {
        for (int i = 0; i < phi.values.size(); ++i) phi.values[i] = it->second[i];
      } else {
        for (int v = 0; v < mesh.n_vertices(); ++v) {
          phi.values[2 * v] = snap.points[v].x();
          phi.values[2 * v + 1] = snap.points[v].y();
        }
      }
      const double rho_ref =
          recon_rho_ref > 0.0 ? recon_rho_ref : title_number(snap.title, "rho_ref");
      ReconConfig2D rc;
      rc.epsilon = recon_eps;
      rc.coercive_sign = !recon_as_printed;
      const DensityField2D field = reconstruct_2d(phi, rho_ref, rc);
      if (recon_out.empty()) recon_out = (snap_path.parent_path() / "rho_recon.vtk").string();
      io::VtkPointData rho;
      rho.name = "rho";
      rho.values.assign(field.values.data(), field.values.data() + field.values.size());
      io::write_vtk_2d(recon_out, mesh, field.positions, snap.title, {rho});
      std::cout << recon_out << ": mass=" << io::g17(field.mass)
                << " min=" << io::g17(field.min_value) << " clamped=" << field.negatives_clamped
                << "\n";
      if (!field.warning.empty()) std::cerr << "warning: " << field.warning << "\n";
      return 0;
    }

    if (rates->parsed()) {
      const CsvTable t = read_csv(rates_csv);
      const int tc = t.column("t");
      const int vc = t.column(rates_column);
      std::vector<double> ts, vs;
      for (const auto &row : t.rows) {
        ts.push_back(row[tc]);
        vs.push_back(row[vc]);
      }
      double offset = rates_offset;
      if (rates_offset_final) offset += vs.back();
      for (auto &v : vs) v -= offset;
      const RateModel model =
          rates_model == "power" ? RateModel::power_law_in_t : RateModel::exponential_in_t;
      const RateFit fit = (rates_hi > rates_lo)
                              ? fit_rate(ts, vs, model, rates_lo, rates_hi)
                              : fit_rate(ts, vs, model);
      std::cout << "model=" << rates_model << " rate=" << io::g17(fit.rate)
                << " r2=" << io::g17(fit.r_squared) << " window=[" << io::g17(fit.window_lo)
                << "," << io::g17(fit.window_hi) << "] n=" << fit.n_used << "\n";
      if (!fit.warning.empty()) std::cerr << "warning: " << fit.warning << "\n";
      return 0;
    }
  } catch (const InvalidSpecError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
