#pragma once

// Reference-surface geometry: providers evaluate the immersion m0 per
// triangle (finite element interpolation of nodal positions, or closed
// forms for the presets), and surface_geometry packages the fundamental
// tensors at a point.

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "mesh.hpp"
#include "so3.hpp"

namespace cosshell {

class GeometryProvider {
 public:
  virtual ~GeometryProvider() = default;

  // second derivatives ordered (m_11, m_12, m_22) in reference coordinates
  virtual void evaluate(int triangle, const Eigen::Vector2d& x, Eigen::Vector3d& position,
                        Eigen::Matrix<double, 3, 2>& jacobian,
                        std::array<Eigen::Vector3d, 3>& second) const = 0;

  Eigen::Vector3d position(int triangle, const Eigen::Vector2d& x) const {
    Eigen::Vector3d p;
    Eigen::Matrix<double, 3, 2> j;
    std::array<Eigen::Vector3d, 3> s;
    evaluate(triangle, x, p, j, s);
    return p;
  }
};

// Geometry interpolated from the mesh's own nodal positions with Lagrange
// polynomials of the mesh's geometry order.
class FeGeometryProvider : public GeometryProvider {
 public:
  explicit FeGeometryProvider(const ParamMesh& mesh) : mesh_(&mesh) {}

  void evaluate(int t, const Eigen::Vector2d& x, Eigen::Vector3d& position,
                Eigen::Matrix<double, 3, 2>& jacobian,
                std::array<Eigen::Vector3d, 3>& second) const override {
    const int p = mesh_->geometry_order;
    std::vector<double> val;
    std::vector<Eigen::Vector2d> grad;
    shape_functions(p, x, val, grad);
    position.setZero();
    jacobian.setZero();
    second = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    const int n = mesh_->nodes_per_triangle();
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d& pos = mesh_->positions[mesh_->triangles[t][i]];
      position += val[i] * pos;
      jacobian += pos * grad[i].transpose();
    }
    if (p == 2) {
      // second-order shape functions have constant Hessians:
      // corner i: 4 dl_i dl_i^T, edge node k: 4 (dl_i dl_j^T + dl_j dl_i^T)
      const Eigen::Vector2d dl[3] = {{-1, -1}, {1, 0}, {0, 1}};
      for (int i = 0; i < 6; ++i) {
        const Eigen::Vector3d& pos = mesh_->positions[mesh_->triangles[t][i]];
        Eigen::Matrix2d h;
        if (i < 3)
          h = 4.0 * dl[i] * dl[i].transpose();
        else {
          const int a = (i - 3 + 1) % 3, b = (i - 3 + 2) % 3;
          h = 4.0 * (dl[a] * dl[b].transpose() + dl[b] * dl[a].transpose());
        }
        second[0] += h(0, 0) * pos;
        second[1] += h(0, 1) * pos;
        second[2] += h(1, 1) * pos;
      }
    }
  }

 private:
  const ParamMesh* mesh_;
};

// Closed-form surface patch (u, v) -> R^3 with exact derivatives.
struct SurfaceFormula {
  virtual ~SurfaceFormula() = default;
  // out = {m, m_u, m_v, m_uu, m_uv, m_vv}
  virtual void eval(double u, double v, std::array<Eigen::Vector3d, 6>& out) const = 0;
};

// Analytic provider: per-triangle affine map into the (u, v) parameter
// plane composed with a closed-form surface. The per-triangle parameter
// values are unwrapped, so seams cost nothing here.
class ChartGeometryProvider : public GeometryProvider {
 public:
  struct Chart {
    Eigen::Vector2d p0, e1, e2;  // (u,v)(x) = p0 + x1 e1 + x2 e2
  };

  ChartGeometryProvider(std::shared_ptr<const SurfaceFormula> surface, std::vector<Chart> charts)
      : surface_(std::move(surface)), charts_(std::move(charts)) {}

  void evaluate(int t, const Eigen::Vector2d& x, Eigen::Vector3d& position,
                Eigen::Matrix<double, 3, 2>& jacobian,
                std::array<Eigen::Vector3d, 3>& second) const override {
    const Chart& c = charts_[t];
    const Eigen::Vector2d uv = c.p0 + x[0] * c.e1 + x[1] * c.e2;
    std::array<Eigen::Vector3d, 6> d;
    surface_->eval(uv[0], uv[1], d);
    position = d[0];
    jacobian.col(0) = d[1] * c.e1[0] + d[2] * c.e1[1];
    jacobian.col(1) = d[1] * c.e2[0] + d[2] * c.e2[1];
    auto hess = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      return d[3] * (a[0] * b[0]) + d[4] * (a[0] * b[1] + a[1] * b[0]) + d[5] * (a[1] * b[1]);
    };
    second[0] = hess(c.e1, c.e1);
    second[1] = hess(c.e1, c.e2);
    second[2] = hess(c.e2, c.e2);
  }

 private:
  std::shared_ptr<const SurfaceFormula> surface_;
  std::vector<Chart> charts_;
};

// Exact sphere patches: the affine blend of the corner directions is
// radially projected back onto the sphere of radius R.
class SphereBlendProvider : public GeometryProvider {
 public:
  SphereBlendProvider(double radius, std::vector<std::array<Eigen::Vector3d, 3>> corners)
      : radius_(radius), corners_(std::move(corners)) {}

  void evaluate(int t, const Eigen::Vector2d& x, Eigen::Vector3d& position,
                Eigen::Matrix<double, 3, 2>& jacobian,
                std::array<Eigen::Vector3d, 3>& second) const override {
    const auto& c = corners_[t];
    const Eigen::Vector3d g1 = c[1] - c[0], g2 = c[2] - c[0];
    const Eigen::Vector3d bl = c[0] + x[0] * g1 + x[1] * g2;
    const double n2 = bl.squaredNorm(), n = std::sqrt(n2);
    position = (radius_ / n) * bl;
    auto d1 = [&](const Eigen::Vector3d& g) {
      return (radius_ / n) * (g - bl * (bl.dot(g) / n2));
    };
    jacobian.col(0) = d1(g1);
    jacobian.col(1) = d1(g2);
    auto d2 = [&](const Eigen::Vector3d& ga, const Eigen::Vector3d& gb) {
      const double bga = bl.dot(ga), bgb = bl.dot(gb);
      return (radius_ / (n * n2)) *
             (-ga * bgb - gb * bga - bl * ga.dot(gb) + bl * (3.0 * bga * bgb / n2));
    };
    second[0] = d2(g1, g1);
    second[1] = d2(g1, g2);
    second[2] = d2(g2, g2);
  }

 private:
  double radius_;
  std::vector<std::array<Eigen::Vector3d, 3>> corners_;
};

// Per-point package of the reference-surface quantities entering the
// energy: covariant/contravariant bases, normal, fundamental tensors a, b,
// the alternating pseudo-tensor c, curvatures and the area element.
struct SurfaceGeometry {
  Eigen::Vector3d position;
  Eigen::Vector3d a1, a2;        // covariant basis
  Eigen::Vector3d acon1, acon2;  // contravariant basis
  Eigen::Vector3d n0;            // unit normal
  Eigen::Matrix3d a, b, c;
  double K = 0, H = 0;           // Gauss and mean curvature
  double kappa1 = 0, kappa2 = 0;
  double area_element = 0;       // sqrt(det(grad^T grad))
};

inline SurfaceGeometry surface_geometry(const GeometryProvider& provider, int triangle,
                                        const Eigen::Vector2d& x) {
  SurfaceGeometry g;
  Eigen::Matrix<double, 3, 2> jac;
  std::array<Eigen::Vector3d, 3> sec;
  provider.evaluate(triangle, x, g.position, jac, sec);
  g.a1 = jac.col(0);
  g.a2 = jac.col(1);

  const double g11 = g.a1.dot(g.a1), g12 = g.a1.dot(g.a2), g22 = g.a2.dot(g.a2);
  const double det_i = g11 * g22 - g12 * g12;
  if (!(det_i > 1e-28)) throw DegenerateImmersion(triangle);
  g.area_element = std::sqrt(det_i);

  const Eigen::Vector3d w = g.a1.cross(g.a2);
  g.n0 = w / g.area_element;

  g.acon1 = (g22 * g.a1 - g12 * g.a2) / det_i;
  g.acon2 = (g11 * g.a2 - g12 * g.a1) / det_i;

  g.a = g.a1 * g.acon1.transpose() + g.a2 * g.acon2.transpose();
  g.c = (g.a1 * g.a2.transpose() - g.a2 * g.a1.transpose()) / g.area_element;

  // derivative of the unit normal through the normalized cross product
  const Eigen::Vector3d w1 = sec[0].cross(g.a2) + g.a1.cross(sec[1]);
  const Eigen::Vector3d w2 = sec[1].cross(g.a2) + g.a1.cross(sec[2]);
  const Eigen::Vector3d n1 = (w1 - g.n0 * g.n0.dot(w1)) / g.area_element;
  const Eigen::Vector3d n2 = (w2 - g.n0 * g.n0.dot(w2)) / g.area_element;
  g.b = -(n1 * g.acon1.transpose() + n2 * g.acon2.transpose());

  // curvatures from the shape operator in the covariant frame
  Eigen::Matrix2d first, secondff;
  first << g11, g12, g12, g22;
  secondff << -g.a1.dot(n1), -g.a1.dot(n2), -g.a2.dot(n1), -g.a2.dot(n2);
  const Eigen::Matrix2d shape_op = first.inverse() * secondff;
  g.H = 0.5 * g.b.trace();
  g.K = shape_op.determinant();
  const double disc = std::sqrt(std::max(g.H * g.H - g.K, 0.0));
  g.kappa1 = g.H + disc;
  g.kappa2 = g.H - disc;
  return g;
}

// Q0 = polar(grad m0 | n0); purely diagnostic, its third director is n0.
inline Rotation reference_microrotation(const SurfaceGeometry& g) {
  Eigen::Matrix3d f;
  f.col(0) = g.a1;
  f.col(1) = g.a2;
  f.col(2) = g.n0;
  return polar(f);
}

}  // namespace cosshell
