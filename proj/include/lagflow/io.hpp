#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/density_recon.hpp"
#include "lagflow/mesh.hpp"

namespace lagflow::io {

// shortest round-trippable decimal representation; keeps CSV output
// bit-identical across runs
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path &path, const std::string &content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

inline std::uint64_t fnv1a64(const std::string &data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for checksumming");
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
                      const std::vector<std::vector<double>> &rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += g17(row[i]);
    }
    out += '\n';
  }
  write_text(path, out);
}

inline void write_phi_csv_1d(const std::filesystem::path &path, const Diffeo1D &phi, double t) {
  std::string out = "# t = " + g17(t) + "\nm,phi\n";
  for (int i = 0; i < phi.grid.n_nodes(); ++i)
    out += g17(phi.grid.node(i)) + "," + g17(phi.phi[i]) + "\n";
  write_text(path, out);
}

inline void write_rho_csv_1d(const std::filesystem::path &path, const DensityField1D &field,
                             double t) {
  std::string out = "# t = " + g17(t) + "\nx,rho\n";
  for (int c = 0; c < field.n_cells(); ++c)
    out += g17(field.midpoint(c)) + "," + g17(field.values[c]) + "\n";
  write_text(path, out);
}

struct VtkPointData {
  std::string name;
  std::vector<double> values; // scalars: n_vertices; vectors: 2*n_vertices
  bool is_vector = false;
};

// Legacy ASCII VTK unstructured grid.  `positions` is interleaved (x,y) per
// vertex (reference or transformed); metadata rides in the 256-char title.
inline void write_vtk_2d(const std::filesystem::path &path, const TriMesh &mesh,
                         const Eigen::VectorXd &positions, const std::string &title,
                         const std::vector<VtkPointData> &point_data = {}) {
  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();
  std::string out = "# vtk DataFile Version 3.0\n" + title + "\nASCII\n" +
                    "DATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nv) + " double\n";
  for (int v = 0; v < nv; ++v)
    out += g17(positions[2 * v]) + " " + g17(positions[2 * v + 1]) + " 0\n";
  out += "CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt) + "\n";
  for (int t = 0; t < nt; ++t)
    out += "3 " + std::to_string(mesh.triangles[t][0]) + " " +
           std::to_string(mesh.triangles[t][1]) + " " + std::to_string(mesh.triangles[t][2]) +
           "\n";
  out += "CELL_TYPES " + std::to_string(nt) + "\n";
  for (int t = 0; t < nt; ++t) out += "5\n";
  if (!point_data.empty()) {
    out += "POINT_DATA " + std::to_string(nv) + "\n";
    for (const auto &pd : point_data) {
      if (pd.is_vector) {
        out += "VECTORS " + pd.name + " double\n";
        for (int v = 0; v < nv; ++v)
          out += g17(pd.values[2 * v]) + " " + g17(pd.values[2 * v + 1]) + " 0\n";
      } else {
        out += "SCALARS " + pd.name + " double 1\nLOOKUP_TABLE default\n";
        for (int v = 0; v < nv; ++v) out += g17(pd.values[v]) + "\n";
      }
    }
  }
  write_text(path, out);
}

} // namespace lagflow::io
