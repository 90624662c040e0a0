#pragma once

// Triangulated abstract parameter 2-manifold. Topology (including the
// gluings that make Moebius strips and Klein bottles work) is encoded
// purely through shared node ids in the connectivity; nodal reference
// positions are single-valued per topological node.

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "quadrature.hpp"

namespace cosshell {

struct ParamMesh {
  int geometry_order = 1;                     // g in {1, 2}
  std::vector<Eigen::Vector3d> positions;     // m0 at topological nodes
  std::vector<std::array<int, 6>> triangles;  // 3 corners, then 3 edge midpoints
                                              // (midpoint k opposite corner k; -1 if g=1)

  int num_nodes() const { return static_cast<int>(positions.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int nodes_per_triangle() const { return geometry_order == 1 ? 3 : 6; }
};

// ---- scalar Lagrange shape functions on the reference triangle ----

inline int nodes_per_order(int p) {
  switch (p) {
    case 1: return 3;
    case 2: return 6;
    case 3: return 10;
    default: throw UnsupportedOrder("Lagrange order must be in {1, 2, 3}");
  }
}

// Reference coordinates of the local Lagrange nodes. Corner-major: corners
// 0..2, then the nodes of edge k (the edge opposite corner k) ordered from
// corner k+1 to corner k+2, then interior nodes.
inline std::vector<Eigen::Vector2d> local_lagrange_points(int p) {
  const Eigen::Vector2d v[3] = {{0, 0}, {1, 0}, {0, 1}};
  std::vector<Eigen::Vector2d> pts = {v[0], v[1], v[2]};
  if (p >= 2) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d a = v[(k + 1) % 3], b = v[(k + 2) % 3];
      for (int s = 1; s < p; ++s) pts.push_back(a + (double(s) / p) * (b - a));
    }
  }
  if (p == 3) pts.emplace_back(1.0 / 3.0, 1.0 / 3.0);
  return pts;
}

// Values and reference-coordinate gradients of the p-th order shape functions.
inline void shape_functions(int p, const Eigen::Vector2d& x,
                            std::vector<double>& value,
                            std::vector<Eigen::Vector2d>& gradient) {
  const double l[3] = {1.0 - x[0] - x[1], x[0], x[1]};
  const Eigen::Vector2d dl[3] = {{-1, -1}, {1, 0}, {0, 1}};
  const int n = nodes_per_order(p);
  value.assign(n, 0.0);
  gradient.assign(n, Eigen::Vector2d::Zero());

  if (p == 1) {
    for (int i = 0; i < 3; ++i) {
      value[i] = l[i];
      gradient[i] = dl[i];
    }
    return;
  }
  if (p == 2) {
    for (int i = 0; i < 3; ++i) {
      value[i] = l[i] * (2.0 * l[i] - 1.0);
      gradient[i] = (4.0 * l[i] - 1.0) * dl[i];
    }
    for (int k = 0; k < 3; ++k) {
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      value[3 + k] = 4.0 * l[i] * l[j];
      gradient[3 + k] = 4.0 * (l[j] * dl[i] + l[i] * dl[j]);
    }
    return;
  }
  // p == 3
  for (int i = 0; i < 3; ++i) {
    value[i] = 0.5 * l[i] * (3.0 * l[i] - 1.0) * (3.0 * l[i] - 2.0);
    gradient[i] = 0.5 * (27.0 * l[i] * l[i] - 18.0 * l[i] + 2.0) * dl[i];
  }
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    // node at 1/3 from corner i, then at 2/3
    value[3 + 2 * k] = 4.5 * l[i] * l[j] * (3.0 * l[i] - 1.0);
    gradient[3 + 2 * k] = 4.5 * ((6.0 * l[i] - 1.0) * l[j] * dl[i] + l[i] * (3.0 * l[i] - 1.0) * dl[j]);
    value[3 + 2 * k + 1] = 4.5 * l[i] * l[j] * (3.0 * l[j] - 1.0);
    gradient[3 + 2 * k + 1] = 4.5 * (l[j] * (3.0 * l[j] - 1.0) * dl[i] + (6.0 * l[j] - 1.0) * l[i] * dl[j]);
  }
  value[9] = 27.0 * l[0] * l[1] * l[2];
  gradient[9] = 27.0 * (l[1] * l[2] * dl[0] + l[0] * l[2] * dl[1] + l[0] * l[1] * dl[2]);
}

// ---- edges ----

struct EdgeInfo {
  int a = -1, b = -1;  // corner node ids, a < b
  int tri[2] = {-1, -1};
  int local[2] = {-1, -1};  // local edge index within each triangle
  int count = 0;
  bool boundary() const { return count == 1; }
};

inline std::vector<EdgeInfo> build_edges(const ParamMesh& mesh) {
  std::map<std::pair<int, int>, int> index;
  std::vector<EdgeInfo> edges;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int u = mesh.triangles[t][(k + 1) % 3];
      const int v = mesh.triangles[t][(k + 2) % 3];
      const std::pair<int, int> key{std::min(u, v), std::max(u, v)};
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(edges.size()));
      if (inserted) {
        EdgeInfo e;
        e.a = key.first;
        e.b = key.second;
        edges.push_back(e);
      }
      EdgeInfo& e = edges[it->second];
      if (e.count >= 2)
        throw NonManifoldEdge("edge (" + std::to_string(key.first) + ", " +
                              std::to_string(key.second) + ") belongs to more than 2 triangles");
      e.tri[e.count] = t;
      e.local[e.count] = k;
      ++e.count;
    }
  }
  return edges;
}

// ---- relative orientation of neighboring triangles ----

struct OrientationFlags {
  std::vector<EdgeInfo> edges;
  std::vector<bool> consistent;  // per edge; true also for boundary edges
  bool orientable = false;
};

inline OrientationFlags orientation_flags(const ParamMesh& mesh) {
  OrientationFlags out;
  out.edges = build_edges(mesh);
  out.consistent.assign(out.edges.size(), true);

  auto directed = [&](int t, int k) {  // edge k of t traversed along the boundary cycle
    return std::pair<int, int>{mesh.triangles[t][(k + 1) % 3], mesh.triangles[t][(k + 2) % 3]};
  };
  for (size_t e = 0; e < out.edges.size(); ++e) {
    const EdgeInfo& ed = out.edges[e];
    if (ed.count != 2) continue;
    // consistent orientation means the shared edge is traversed in opposite directions
    out.consistent[e] = directed(ed.tri[0], ed.local[0]) != directed(ed.tri[1], ed.local[1]);
  }

  // try to 2-color triangle flips so that all interior edges become consistent
  std::vector<std::vector<std::pair<int, bool>>> nbr(mesh.num_triangles());
  for (size_t e = 0; e < out.edges.size(); ++e) {
    const EdgeInfo& ed = out.edges[e];
    if (ed.count != 2) continue;
    nbr[ed.tri[0]].push_back({ed.tri[1], out.consistent[e]});
    nbr[ed.tri[1]].push_back({ed.tri[0], out.consistent[e]});
  }
  std::vector<int> color(mesh.num_triangles(), -1);
  out.orientable = true;
  for (int seed = 0; seed < mesh.num_triangles() && out.orientable; ++seed) {
    if (color[seed] != -1) continue;
    color[seed] = 0;
    std::vector<int> stack = {seed};
    while (!stack.empty() && out.orientable) {
      const int t = stack.back();
      stack.pop_back();
      for (auto [u, cons] : nbr[t]) {
        const int want = cons ? color[t] : 1 - color[t];
        if (color[u] == -1) {
          color[u] = want;
          stack.push_back(u);
        } else if (color[u] != want) {
          out.orientable = false;
          break;
        }
      }
    }
  }
  return out;
}

// ---- global Lagrange layouts ----

struct LagrangeLayout {
  int order = 1;
  int count = 0;                                  // number of global nodes
  std::vector<Eigen::Vector2d> local_coords;      // per local node
  std::vector<std::array<int, 10>> elem_nodes;    // per triangle: local -> global
  std::vector<std::pair<int, Eigen::Vector2d>> anchor;  // per global node: (triangle, ref coords)

  int nodes_per_elem() const { return static_cast<int>(local_coords.size()); }
};

// Globally consistent Lagrange point numbering; nodes on glued edges are
// identified through the shared corner ids.
inline LagrangeLayout lagrange_points(const ParamMesh& mesh, int p) {
  LagrangeLayout lay;
  lay.order = p;
  lay.local_coords = local_lagrange_points(p);
  lay.elem_nodes.assign(mesh.num_triangles(), {});

  // corner nodes: dense renumbering of the corner ids in mesh-id order
  std::vector<int> corner_ids;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) corner_ids.push_back(t[k]);
  std::sort(corner_ids.begin(), corner_ids.end());
  corner_ids.erase(std::unique(corner_ids.begin(), corner_ids.end()), corner_ids.end());
  std::map<int, int> corner_map;
  for (size_t i = 0; i < corner_ids.size(); ++i) corner_map[corner_ids[i]] = static_cast<int>(i);
  int next = static_cast<int>(corner_ids.size());

  std::map<std::pair<int, int>, int> edge_first;  // first global node of an edge's block
  lay.anchor.assign(next, {-1, Eigen::Vector2d::Zero()});

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    auto& map = lay.elem_nodes[t];
    for (int k = 0; k < 3; ++k) {
      map[k] = corner_map.at(mesh.triangles[t][k]);
      if (lay.anchor[map[k]].first < 0) lay.anchor[map[k]] = {t, lay.local_coords[k]};
    }
    if (p >= 2) {
      for (int k = 0; k < 3; ++k) {
        const int ga = mesh.triangles[t][(k + 1) % 3];
        const int gb = mesh.triangles[t][(k + 2) % 3];
        const std::pair<int, int> key{std::min(ga, gb), std::max(ga, gb)};
        auto [it, inserted] = edge_first.try_emplace(key, next);
        if (inserted) {
          next += p - 1;
          lay.anchor.resize(next, {-1, Eigen::Vector2d::Zero()});
        }
        for (int s = 1; s < p; ++s) {
          // node index along the edge, measured from the smaller corner id
          const int along = (ga < gb) ? (s - 1) : (p - 1 - s);
          const int local = 3 + (p - 1) * k + (s - 1);
          map[local] = it->second + along;
          if (lay.anchor[map[local]].first < 0)
            lay.anchor[map[local]] = {t, lay.local_coords[local]};
        }
      }
    }
    if (p == 3) {
      map[9] = next++;
      lay.anchor.push_back({t, lay.local_coords[9]});
    }
  }
  lay.count = next;
  return lay;
}

// ---- mesh file format ----
//
//   cosserat-mesh v1 <g>
//   nodes <N>
//   <id> <x> <y> <z>
//   triangles <M>
//   <3 or 6 node ids, corner-major>

inline void save_mesh(const ParamMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "cosserat-mesh v1 " << mesh.geometry_order << "\n";
  out << "nodes " << mesh.num_nodes() << "\n";
  char buf[128];
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.positions[i];
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g\n", i, p[0], p[1], p[2]);
    out << buf;
  }
  out << "triangles " << mesh.num_triangles() << "\n";
  const int npt = mesh.nodes_per_triangle();
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < npt; ++k) out << t[k] << (k + 1 < npt ? ' ' : '\n');
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace detail {

inline void validate_mesh(const ParamMesh& mesh) {
  const int n = mesh.num_nodes();
  const int npt = mesh.nodes_per_triangle();
  std::map<std::pair<int, int>, int> midpoint_of_edge;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < npt; ++k)
      if (tri[k] < 0 || tri[k] >= n)
        throw ParseError("triangle " + std::to_string(t) + " references unknown node " +
                         std::to_string(tri[k]));
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw ParseError("triangle " + std::to_string(t) + " has repeated corners");
    if (mesh.geometry_order == 2) {
      for (int k = 0; k < 3; ++k) {
        const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
        auto [it, inserted] =
            midpoint_of_edge.try_emplace({std::min(a, b), std::max(a, b)}, tri[3 + k]);
        if (!inserted && it->second != tri[3 + k])
          throw ParseError("edge of triangle " + std::to_string(t) +
                           " carries two different midpoint nodes");
      }
    }
  }
  build_edges(mesh);  // throws NonManifoldEdge
}

// Area element of the finite element geometry at a reference point.
inline double fe_area_element(const ParamMesh& mesh, int t, const Eigen::Vector2d& x) {
  std::vector<double> val;
  std::vector<Eigen::Vector2d> grad;
  shape_functions(mesh.geometry_order, x, val, grad);
  Eigen::Matrix<double, 3, 2> jac = Eigen::Matrix<double, 3, 2>::Zero();
  for (int i = 0; i < mesh.nodes_per_triangle(); ++i)
    jac += mesh.positions[mesh.triangles[t][i]] * grad[i].transpose();
  return std::sqrt((jac.transpose() * jac).determinant());
}

inline void check_immersion(const ParamMesh& mesh, double a0 = 1e-10) {
  const QuadratureRule rule = quadrature_rule(2 * mesh.geometry_order + 1);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (const auto& x : rule.points)
      if (!(fe_area_element(mesh, t, x) >= a0)) throw DegenerateImmersion(t);
}

}  // namespace detail

inline ParamMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  auto next_line = [&in](const char* what) {
    std::string line;
    while (std::getline(in, line)) {
      // strip comments and skip blank lines
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    throw ParseError(std::string("unexpected end of file, expected ") + what);
  };

  ParamMesh mesh;
  {
    std::istringstream h(next_line("header"));
    std::string magic, version;
    int g = 0;
    h >> magic >> version >> g;
    if (!h || magic != "cosserat-mesh" || version != "v1")
      throw ParseError("bad header, expected 'cosserat-mesh v1 <g>'");
    if (g != 1 && g != 2) throw ParseError("geometry order must be 1 or 2");
    mesh.geometry_order = g;
  }
  {
    std::istringstream s(next_line("nodes section"));
    std::string kw;
    long n = -1;
    s >> kw >> n;
    if (!s || kw != "nodes" || n < 0) throw ParseError("expected 'nodes <N>'");
    mesh.positions.resize(n);
    for (long i = 0; i < n; ++i) {
      std::istringstream ls(next_line("node line"));
      long id;
      Eigen::Vector3d p;
      ls >> id >> p[0] >> p[1] >> p[2];
      if (!ls) throw ParseError("malformed node line " + std::to_string(i));
      if (id != i) throw ParseError("node ids must be dense and 0-based");
      mesh.positions[i] = p;
    }
  }
  {
    std::istringstream s(next_line("triangles section"));
    std::string kw;
    long m = -1;
    s >> kw >> m;
    if (!s || kw != "triangles" || m < 0) throw ParseError("expected 'triangles <M>'");
    const int npt = mesh.geometry_order == 1 ? 3 : 6;
    mesh.triangles.resize(m);
    for (long t = 0; t < m; ++t) {
      std::istringstream ls(next_line("triangle line"));
      auto& tri = mesh.triangles[t];
      tri.fill(-1);
      for (int k = 0; k < npt; ++k) {
        ls >> tri[k];
        if (!ls) throw ParseError("malformed triangle line " + std::to_string(t));
      }
    }
  }
  detail::validate_mesh(mesh);
  detail::check_immersion(mesh);
  return mesh;
}

}  // namespace cosshell
