#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "lagflow/core.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// 1d: uniform grid on the mass interval [0, M].  Node i sits at i*dx in mass
// coordinates; a cell carries exactly dx units of mass by construction, which
// is what makes the Lagrangian bookkeeping trivial.
// ---------------------------------------------------------------------------

struct Grid1D {
  double mass = 1.0;   // total mass M, the grid covers [0, M]
  int n_cells = 0;
  double dx = 0.0;

  int n_nodes() const { return n_cells + 1; }
  double node(int i) const { return i * dx; }
  // trapezoid weight of node i
  double weight(int i) const { return (i == 0 || i == n_cells) ? 0.5 * dx : dx; }
};

inline Grid1D build_grid_1d(double mass, int n_cells) {
  if (!(mass > 0.0)) throw InvalidSpecError("build_grid_1d: mass must be positive");
  if (n_cells < 2) throw InvalidSpecError("build_grid_1d: need at least 2 cells");
  Grid1D g;
  g.mass = mass;
  g.n_cells = n_cells;
  g.dx = mass / n_cells;
  return g;
}

// Nodal values of a (candidate) monotone transport map on a Grid1D.
struct Diffeo1D {
  Grid1D grid;
  Eigen::VectorXd phi; // size grid.n_nodes()

  double slope(int cell) const { return (phi[cell + 1] - phi[cell]) / grid.dx; }
  double min_slope() const {
    double s = slope(0);
    for (int c = 1; c < grid.n_cells; ++c) s = std::min(s, slope(c));
    return s;
  }
  bool monotone() const { return min_slope() > 0.0; }
};

inline Diffeo1D make_identity_like_1d(const Grid1D &g, double a, double b) {
  // affine map [0,M] -> [a,b]; uniform density (b-a ... carries slope (b-a)/M)
  Diffeo1D d;
  d.grid = g;
  d.phi.resize(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i)
    d.phi[i] = a + (b - a) * g.node(i) / g.mass;
  return d;
}

// ---------------------------------------------------------------------------
// 2d: triangulations.  Vertices, ccw triangles, cached P1 geometry on the
// reference configuration.  Meshes are immutable after construction.
// ---------------------------------------------------------------------------

struct TriMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;     // ccw
  std::vector<char> is_boundary;                 // per vertex
  std::vector<int> boundary_vertices;            // sorted list
  std::vector<double> area;                      // per triangle, reference
  std::vector<std::array<Eigen::Vector2d, 3>> hat_grad; // per triangle, per local vertex
  std::vector<std::array<int, 3>> neighbor;      // tri across local edge a (edge opposite vertex a), -1 on hull
  double h_max = 0.0;
  double total_area = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  Eigen::Vector2d barycenter(int t) const {
    const auto &tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
  }
};

// Geometry of one element under a map given by nodal values.
struct ElementGeometry {
  Eigen::Matrix2d jacobian;             // DPhi, constant on the element
  double det = 0.0;
  Eigen::Matrix2d cof;                  // cof([[a,b],[c,d]]) = [[d,-c],[-b,a]]
  std::array<Eigen::Vector2d, 3> hat_gradients; // reference P1 gradients
};

inline Eigen::Matrix2d cofactor2(const Eigen::Matrix2d &m) {
  Eigen::Matrix2d c;
  c << m(1, 1), -m(1, 0), -m(0, 1), m(0, 0);
  return c;
}

namespace detail {

inline double signed_area2(const Eigen::Vector2d &p0, const Eigen::Vector2d &p1,
                           const Eigen::Vector2d &p2) {
  return (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
}

inline void finalize_mesh(TriMesh &m) {
  const int nv = m.n_vertices();
  const int nt = m.n_triangles();
  // enforce ccw orientation
  for (auto &tri : m.triangles) {
    if (signed_area2(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]) < 0.0)
      std::swap(tri[1], tri[2]);
  }
  m.area.resize(nt);
  m.hat_grad.resize(nt);
  m.h_max = 0.0;
  m.total_area = 0.0;
  for (int t = 0; t < nt; ++t) {
    const auto &tri = m.triangles[t];
    const Eigen::Vector2d p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
    const double a2 = signed_area2(p0, p1, p2);
    if (!(a2 > 0.0)) throw InvalidSpecError("mesh: degenerate element in construction");
    m.area[t] = 0.5 * a2;
    m.total_area += m.area[t];
    // grad of hat at local vertex a is perp(opposite edge)/(2A), perp(v)=(-vy,vx)
    const Eigen::Vector2d e0 = p2 - p1, e1 = p0 - p2, e2 = p1 - p0;
    m.hat_grad[t][0] = Eigen::Vector2d(-e0.y(), e0.x()) / a2;
    m.hat_grad[t][1] = Eigen::Vector2d(-e1.y(), e1.x()) / a2;
    m.hat_grad[t][2] = Eigen::Vector2d(-e2.y(), e2.x()) / a2;
    m.h_max = std::max({m.h_max, (p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  }
  // neighbor table via edge map (sorted endpoint pair -> (tri, local edge))
  m.neighbor.assign(nt, {-1, -1, -1});
  std::vector<std::array<int, 4>> edges; // v_lo, v_hi, tri, local
  edges.reserve(3 * nt);
  for (int t = 0; t < nt; ++t)
    for (int a = 0; a < 3; ++a) {
      int u = m.triangles[t][(a + 1) % 3], v = m.triangles[t][(a + 2) % 3];
      if (u > v) std::swap(u, v);
      edges.push_back({u, v, t, a});
    }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i][0] == edges[i + 1][0] && edges[i][1] == edges[i + 1][1]) {
      m.neighbor[edges[i][2]][edges[i][3]] = edges[i + 1][2];
      m.neighbor[edges[i + 1][2]][edges[i + 1][3]] = edges[i][2];
    }
  }
  m.boundary_vertices.clear();
  for (int v = 0; v < nv; ++v)
    if (m.is_boundary[v]) m.boundary_vertices.push_back(v);
}

} // namespace detail

// Structured polar mesh of the disk of radius R: ring k of n_rings carries 6k
// vertices, annuli triangulated by an angular two-pointer sweep.  Gives
// 1 + 3 n (n+1) vertices and 6 n^2 triangles.
inline TriMesh build_disk_mesh(double radius, int n_rings) {
  if (!(radius > 0.0)) throw InvalidSpecError("build_disk_mesh: radius must be positive");
  if (n_rings < 1) throw InvalidSpecError("build_disk_mesh: need at least 1 ring");
  TriMesh m;
  std::vector<int> ring_start(n_rings + 1);
  m.vertices.emplace_back(0.0, 0.0);
  ring_start[0] = 0;
  for (int k = 1; k <= n_rings; ++k) {
    ring_start[k] = static_cast<int>(m.vertices.size());
    const int nk = 6 * k;
    const double r = radius * k / n_rings;
    for (int j = 0; j < nk; ++j) {
      const double th = 2.0 * M_PI * j / nk;
      m.vertices.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }
  // innermost fan
  for (int j = 0; j < 6; ++j)
    m.triangles.push_back({0, ring_start[1] + j, ring_start[1] + (j + 1) % 6});
  // annuli
  for (int k = 2; k <= n_rings; ++k) {
    const int m1 = 6 * (k - 1), m2 = 6 * k;
    const int s1 = ring_start[k - 1], s2 = ring_start[k];
    int i1 = 0, i2 = 0;
    while (i1 < m1 || i2 < m2) {
      const double a1 = (i1 < m1) ? 2.0 * M_PI * (i1 + 1) / m1 : 1e30;
      const double a2 = (i2 < m2) ? 2.0 * M_PI * (i2 + 1) / m2 : 1e30;
      if (a2 <= a1) {
        m.triangles.push_back({s1 + i1 % m1, s2 + i2 % m2, s2 + (i2 + 1) % m2});
        ++i2;
      } else {
        m.triangles.push_back({s1 + i1 % m1, s2 + i2 % m2, s1 + (i1 + 1) % m1});
        ++i1;
      }
    }
  }
  m.is_boundary.assign(m.vertices.size(), 0);
  for (int j = ring_start[n_rings]; j < static_cast<int>(m.vertices.size()); ++j)
    m.is_boundary[j] = 1;
  detail::finalize_mesh(m);
  return m;
}

// Rebuild a mesh from raw arrays (e.g. re-read from a VTK export).  Boundary
// vertices are the endpoints of edges used by only one triangle.
inline TriMesh build_mesh_from_arrays(std::vector<Eigen::Vector2d> vertices,
                                      std::vector<std::array<int, 3>> triangles) {
  TriMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  std::vector<std::array<int, 2>> edges;
  edges.reserve(3 * m.triangles.size());
  for (const auto &tri : m.triangles)
    for (int a = 0; a < 3; ++a) {
      int u = tri[(a + 1) % 3], v = tri[(a + 2) % 3];
      if (u > v) std::swap(u, v);
      edges.push_back({u, v});
    }
  std::sort(edges.begin(), edges.end());
  m.is_boundary.assign(m.vertices.size(), 0);
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    if (j - i == 1) {
      m.is_boundary[edges[i][0]] = 1;
      m.is_boundary[edges[i][1]] = 1;
    }
    i = j;
  }
  detail::finalize_mesh(m);
  return m;
}

// Axis-aligned rectangle [x0,x1]x[y0,y1], nx by ny cells, each split along the
// lower-left to upper-right diagonal.
inline TriMesh build_rect_mesh(double x0, double y0, double x1, double y1, int nx, int ny) {
  if (!(x1 > x0) || !(y1 > y0)) throw InvalidSpecError("build_rect_mesh: empty rectangle");
  if (nx < 1 || ny < 1) throw InvalidSpecError("build_rect_mesh: need at least 1x1 cells");
  TriMesh m;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.emplace_back(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny);
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  m.is_boundary.assign(m.vertices.size(), 0);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (i == 0 || j == 0 || i == nx || j == ny) m.is_boundary[vid(i, j)] = 1;
  detail::finalize_mesh(m);
  return m;
}

// Nodal values of a map on a TriMesh, stored interleaved (x0,y0,x1,y1,...).
struct Diffeo2D {
  const TriMesh *mesh = nullptr;
  Eigen::VectorXd values; // 2 * n_vertices

  Eigen::Vector2d pos(int v) const { return {values[2 * v], values[2 * v + 1]}; }
  void set_pos(int v, const Eigen::Vector2d &p) {
    values[2 * v] = p.x();
    values[2 * v + 1] = p.y();
  }
  Eigen::Vector2d barycenter_image(int t) const {
    const auto &tri = mesh->triangles[t];
    return (pos(tri[0]) + pos(tri[1]) + pos(tri[2])) / 3.0;
  }
};

inline Diffeo2D make_identity_2d(const TriMesh &m) {
  Diffeo2D d;
  d.mesh = &m;
  d.values.resize(2 * m.n_vertices());
  for (int v = 0; v < m.n_vertices(); ++v) d.set_pos(v, m.vertices[v]);
  return d;
}

inline ElementGeometry element_geometry(const TriMesh &mesh, const Diffeo2D &phi, int t) {
  ElementGeometry g;
  g.hat_gradients = mesh.hat_grad[t];
  g.jacobian.setZero();
  const auto &tri = mesh.triangles[t];
  for (int a = 0; a < 3; ++a)
    g.jacobian += phi.pos(tri[a]) * mesh.hat_grad[t][a].transpose();
  g.det = g.jacobian.determinant();
  g.cof = cofactor2(g.jacobian);
  return g;
}

// element determinants without the rest of the geometry
inline double element_det(const TriMesh &mesh, const Diffeo2D &phi, int t) {
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  const auto &tri = mesh.triangles[t];
  for (int a = 0; a < 3; ++a)
    J += phi.pos(tri[a]) * mesh.hat_grad[t][a].transpose();
  return J.determinant();
}

} // namespace lagflow
