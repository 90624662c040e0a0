#pragma once

// Legacy ASCII VTK (3.0) export of a configuration: displacement, the
// three director columns of Q_e, and nodal strain norms on linear or
// quadratic triangles.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "gfe.hpp"
#include "shellmodel.hpp"

namespace cosshell {

inline void export_vtk(const Discretization& d, const Configuration& config,
                       const std::string& path) {
  const ParamMesh& mesh = *d.mesh;
  const bool quadratic = mesh.geometry_order == 2 || d.layout1.order == 2;
  const LagrangeLayout display = lagrange_points(mesh, quadratic ? 2 : 1);

  RotationField field;
  field.layout = &d.layout2;
  field.kind = d.kind;
  field.values = config.rotations;

  const int n = display.count;
  std::vector<Eigen::Vector3d> points(n), displacement(n), d1(n), d2(n), d3(n);
  std::vector<double> strain_e(n), strain_k(n);

  std::vector<double> val;
  std::vector<Eigen::Vector2d> grad;
  for (int node = 0; node < n; ++node) {
    const auto& [tri, x] = display.anchor[node];
    shape_functions(d.layout1.order, x, val, grad);
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 3, 2> grad_m = Eigen::Matrix<double, 3, 2>::Zero();
    for (size_t i = 0; i < val.size(); ++i) {
      const Eigen::Vector3d& mi = config.deformation[d.layout1.elem_nodes[tri][i]];
      m += val[i] * mi;
      grad_m += mi * grad[i].transpose();
    }
    const SurfaceGeometry g = surface_geometry(*d.geometry, tri, x);
    const InterpJacobian q = interp_jacobian(field, tri, x);
    const StrainState s = strain_tensors(g, grad_m, q.value, q.d1, q.d2);

    points[node] = m;
    displacement[node] = m - g.position;
    d1[node] = q.value.matrix().col(0);
    d2[node] = q.value.matrix().col(1);
    d3[node] = q.value.matrix().col(2);
    strain_e[node] = s.Ee.norm();
    strain_k[node] = s.Ke.norm();
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[256];
  auto write_vec = [&](const Eigen::Vector3d& v) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v[0], v[1], v[2]);
    out << buf;
  };

  out << "# vtk DataFile Version 3.0\n"
      << "cosserat shell configuration\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << n << " double\n";
  for (const auto& p : points) write_vec(p);

  const int nt = mesh.num_triangles();
  const int per_cell = quadratic ? 6 : 3;
  out << "CELLS " << nt << " " << nt * (per_cell + 1) << "\n";
  for (int t = 0; t < nt; ++t) {
    out << per_cell;
    // VTK quadratic triangles order midpoints as (01, 12, 20); our edge k
    // is opposite corner k, so those are local nodes 5, 3, 4
    const int order[6] = {0, 1, 2, 5, 3, 4};
    for (int i = 0; i < per_cell; ++i) out << ' ' << display.elem_nodes[t][order[i]];
    out << '\n';
  }
  out << "CELL_TYPES " << nt << "\n";
  for (int t = 0; t < nt; ++t) out << (quadratic ? 22 : 5) << "\n";

  out << "POINT_DATA " << n << "\n";
  out << "VECTORS displacement double\n";
  for (const auto& v : displacement) write_vec(v);
  out << "VECTORS director1 double\n";
  for (const auto& v : d1) write_vec(v);
  out << "VECTORS director2 double\n";
  for (const auto& v : d2) write_vec(v);
  out << "VECTORS director3 double\n";
  for (const auto& v : d3) write_vec(v);
  out << "SCALARS membrane_strain_norm double 1\nLOOKUP_TABLE default\n";
  for (double v : strain_e) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  out << "SCALARS bending_strain_norm double 1\nLOOKUP_TABLE default\n";
  for (double v : strain_k) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace cosshell
