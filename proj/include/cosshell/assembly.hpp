#pragma once

// Quadrature-based evaluation of the total shell energy over the algebraic
// unknowns (R^3 nodal deformations, SO(3) nodal microrotations), with exact
// Riemannian gradient and Hessian.
//
// Derivatives are produced by running the scalar-templated element energy
// with forward-mode Taylor scalars: Dual<D> for the gradient, Jet2<D> for
// the Hessian, where D is the number of element degrees of freedom.
// Rotation tangents are right-trivialized: node i is perturbed as
// R_i exp(hat(v_i)), matching the solver's retraction.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"
#include "gfe.hpp"
#include "jet.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "shellmodel.hpp"
#include "smat.hpp"
#include "so3.hpp"

namespace cosshell {

// ---- discretization: layouts plus cached per-quadrature-point geometry ----

struct QuadPointData {
  double weight_darea = 0;  // quadrature weight times area element
  GeomAtPoint geom;
  Vec3d acon[2];
  double kappa1 = 0, kappa2 = 0;
  Eigen::Vector3d m0 = Eigen::Vector3d::Zero();
  double lam1[6] = {0}, lam2[6] = {0};
  Eigen::Vector2d dlam1[6], dlam2[6];
};

struct Discretization {
  const ParamMesh* mesh = nullptr;
  std::shared_ptr<const GeometryProvider> geometry;
  LagrangeLayout layout1;  // deformation, order p1
  LagrangeLayout layout2;  // microrotation, order p2
  InterpKind kind = InterpKind::geodesic;
  int quadrature_order = 0;

  std::vector<std::vector<QuadPointData>> cache;  // [triangle][qp]
  std::vector<Eigen::Vector3d> nodes1, nodes2;    // reference positions of layout nodes

  int num_dofs() const { return 3 * (layout1.count + layout2.count); }
  int rotation_offset() const { return 3 * layout1.count; }
};

inline int default_quadrature_order(int p1, int p2, int g) {
  return 2 * std::max({p1, p2, g}) + 1;
}

inline Discretization make_discretization(const ParamMesh& mesh,
                                          std::shared_ptr<const GeometryProvider> provider,
                                          int p1, int p2, InterpKind kind,
                                          int quadrature_order = -1) {
  if ((p1 != 1 && p1 != 2) || (p2 != 1 && p2 != 2))
    throw UnsupportedOrder("deformation/rotation orders must be 1 or 2");
  Discretization d;
  d.mesh = &mesh;
  d.geometry = std::move(provider);
  d.layout1 = lagrange_points(mesh, p1);
  d.layout2 = lagrange_points(mesh, p2);
  d.kind = kind;
  d.quadrature_order =
      quadrature_order > 0 ? quadrature_order
                           : default_quadrature_order(p1, p2, mesh.geometry_order);

  const QuadratureRule rule = quadrature_rule(d.quadrature_order);
  d.cache.resize(mesh.num_triangles());
  std::vector<double> val;
  std::vector<Eigen::Vector2d> grad;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    d.cache[t].resize(rule.points.size());
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const SurfaceGeometry g = surface_geometry(*d.geometry, t, rule.points[q]);
      QuadPointData& p = d.cache[t][q];
      p.weight_darea = rule.weights[q] * g.area_element;
      p.geom = GeomAtPoint::from(g);
      p.acon[0] = from_eigen(g.acon1);
      p.acon[1] = from_eigen(g.acon2);
      p.kappa1 = g.kappa1;
      p.kappa2 = g.kappa2;
      p.m0 = g.position;
      shape_functions(p1, rule.points[q], val, grad);
      for (size_t i = 0; i < val.size(); ++i) {
        p.lam1[i] = val[i];
        p.dlam1[i] = grad[i];
      }
      shape_functions(p2, rule.points[q], val, grad);
      for (size_t i = 0; i < val.size(); ++i) {
        p.lam2[i] = val[i];
        p.dlam2[i] = grad[i];
      }
    }
  }

  d.nodes1.resize(d.layout1.count);
  for (int n = 0; n < d.layout1.count; ++n)
    d.nodes1[n] = d.geometry->position(d.layout1.anchor[n].first, d.layout1.anchor[n].second);
  d.nodes2.resize(d.layout2.count);
  for (int n = 0; n < d.layout2.count; ++n)
    d.nodes2[n] = d.geometry->position(d.layout2.anchor[n].first, d.layout2.anchor[n].second);
  return d;
}

// ---- configuration and boundary conditions ----

struct Configuration {
  std::vector<Eigen::Vector3d> deformation;  // layout1 nodal values
  std::vector<Rotation> rotations;           // layout2 nodal values
};

inline Configuration reference_configuration(const Discretization& d) {
  Configuration c;
  c.deformation = d.nodes1;
  c.rotations.assign(d.layout2.count, Rotation::identity());
  return c;
}

struct BcDeformation {
  int node = -1;
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  std::array<bool, 3> components = {true, true, true};
};

struct BcRotation {
  int node = -1;
  Rotation value;
};

struct BoundaryConditions {
  std::vector<BcDeformation> deformation;
  std::vector<BcRotation> rotation;
};

struct DofMask {
  std::vector<std::uint8_t> free;  // per scalar dof
};

inline DofMask make_mask(const Discretization& d, const BoundaryConditions& bc) {
  DofMask m;
  m.free.assign(d.num_dofs(), 1);
  for (const auto& b : bc.deformation) {
    if (b.node < 0 || b.node >= d.layout1.count)
      throw UnknownNode("deformation BC node " + std::to_string(b.node));
    for (int c = 0; c < 3; ++c)
      if (b.components[c]) m.free[3 * b.node + c] = 0;
  }
  for (const auto& b : bc.rotation) {
    if (b.node < 0 || b.node >= d.layout2.count)
      throw UnknownNode("rotation BC node " + std::to_string(b.node));
    for (int c = 0; c < 3; ++c) m.free[d.rotation_offset() + 3 * b.node + c] = 0;
  }
  return m;
}

inline void apply_mask(const DofMask& m, Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i)
    if (!m.free[i]) v[i] = 0.0;
}

inline void apply_dirichlet(const BoundaryConditions& bc, Configuration& config) {
  for (const auto& b : bc.deformation) {
    if (b.node < 0 || b.node >= static_cast<int>(config.deformation.size()))
      throw UnknownNode("deformation BC node " + std::to_string(b.node));
    for (int c = 0; c < 3; ++c)
      if (b.components[c]) config.deformation[b.node][c] = b.value[c];
  }
  for (const auto& b : bc.rotation) {
    if (b.node < 0 || b.node >= static_cast<int>(config.rotations.size()))
      throw UnknownNode("rotation BC node " + std::to_string(b.node));
    config.rotations[b.node] = b.value;
  }
}

// ---- loads ----

struct HalfSpace {
  int coord = 0;  // 0, 1, 2 on the reference position m0
  bool greater = true;
  double value = 0;
};
using Selector = std::vector<HalfSpace>;  // conjunction; empty selects everything

inline bool selects(const Selector& s, const Eigen::Vector3d& p) {
  for (const auto& h : s)
    if (h.greater ? !(p[h.coord] >= h.value) : !(p[h.coord] <= h.value)) return false;
  return true;
}

struct VolumeLoad {
  Selector where;
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
};
struct TractionLoad {
  Selector where;
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
};
struct LoadSpec {
  std::vector<VolumeLoad> volume;
  std::vector<TractionLoad> traction;
};

// External potential in algebraic form: Pi(m) = force . m_flat - offset,
// with offset = int <f, m0> + int <t, m0> evaluated with the same quadrature.
struct LoadVector {
  Eigen::VectorXd force;  // size 3 N1
  double offset = 0;
  bool empty = true;
};

inline LoadVector assemble_loads(const Discretization& d, const LoadSpec& spec,
                                 double scale = 1.0) {
  LoadVector out;
  out.force = Eigen::VectorXd::Zero(3 * d.layout1.count);
  out.offset = 0.0;
  out.empty = spec.volume.empty() && spec.traction.empty();

  // The load functional is assembled once per step, so it gets its own
  // high-order rule: the integrand carries the full area-element
  // nonlinearity, and the symmetrization keeps it exact under vertex flips.
  const QuadratureRule rule = symmetrized_rule(quadrature_rule(10));
  const int n1 = d.layout1.nodes_per_elem();
  std::vector<double> val;
  std::vector<Eigen::Vector2d> grad;
  if (!spec.volume.empty()) {
    for (int t = 0; t < d.mesh->num_triangles(); ++t) {
      for (size_t q = 0; q < rule.points.size(); ++q) {
        const SurfaceGeometry g = surface_geometry(*d.geometry, t, rule.points[q]);
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        for (const auto& load : spec.volume)
          if (selects(load.where, g.position)) f += scale * load.value;
        if (f.squaredNorm() == 0.0) continue;
        const double w = rule.weights[q] * g.area_element;
        shape_functions(d.layout1.order, rule.points[q], val, grad);
        for (int i = 0; i < n1; ++i)
          out.force.segment<3>(3 * d.layout1.elem_nodes[t][i]) += w * val[i] * f;
        out.offset += w * f.dot(g.position);
      }
    }
  }

  if (!spec.traction.empty()) {
    const auto edges = build_edges(*d.mesh);
    std::vector<double> ex, ew;
    edge_quadrature(2 * d.layout1.order + 2, ex, ew);
    const Eigen::Vector2d corner[3] = {{0, 0}, {1, 0}, {0, 1}};
    std::vector<double> val;
    std::vector<Eigen::Vector2d> grad;
    for (const EdgeInfo& e : edges) {
      if (!e.boundary()) continue;
      const int t = e.tri[0], k = e.local[0];
      const Eigen::Vector2d xa = corner[(k + 1) % 3], xb = corner[(k + 2) % 3];
      for (size_t q = 0; q < ex.size(); ++q) {
        const Eigen::Vector2d x = xa + ex[q] * (xb - xa);
        Eigen::Vector3d m0;
        Eigen::Matrix<double, 3, 2> jac;
        std::array<Eigen::Vector3d, 3> sec;
        d.geometry->evaluate(t, x, m0, jac, sec);
        Eigen::Vector3d tr = Eigen::Vector3d::Zero();
        for (const auto& load : spec.traction)
          if (selects(load.where, m0)) tr += scale * load.value;
        if (tr.squaredNorm() == 0.0) continue;
        const double ds = (jac * (xb - xa)).norm() * ew[q];
        shape_functions(d.layout1.order, x, val, grad);
        for (int i = 0; i < n1; ++i)
          out.force.segment<3>(3 * d.layout1.elem_nodes[t][i]) += ds * val[i] * tr;
        out.offset += ds * tr.dot(m0);
      }
    }
  }
  return out;
}

inline double external_potential(const LoadVector& loads, const Configuration& config) {
  if (loads.empty) return 0.0;
  double dot = 0.0;
  for (size_t i = 0; i < config.deformation.size(); ++i)
    dot += loads.force.segment<3>(3 * static_cast<int>(i)).dot(config.deformation[i]);
  return dot - loads.offset;
}

// ---- problem bundle ----

struct Problem {
  const Discretization* disc = nullptr;
  MaterialParams material;
  EnergyVariant variant = EnergyVariant::main;
  LoadVector loads;
  BoundaryConditions bc;
  DofMask mask;
};

inline Problem make_problem(const Discretization& disc, const MaterialParams& material,
                            EnergyVariant variant, const LoadSpec& loads,
                            const BoundaryConditions& bc, double load_scale = 1.0) {
  material.validate();
  for (int t = 0; t < disc.mesh->num_triangles(); ++t)
    for (const QuadPointData& qp : disc.cache[t])
      if (!(material.thickness * std::abs(qp.kappa1) < 0.5 &&
            material.thickness * std::abs(qp.kappa2) < 0.5))
        throw InvalidMaterial("thickness bound h|kappa| < 1/2 violated in triangle " +
                              std::to_string(t));
  Problem p;
  p.disc = &disc;
  p.material = material;
  p.variant = variant;
  p.loads = assemble_loads(disc, loads, load_scale);
  p.bc = bc;
  p.mask = make_mask(disc, bc);
  return p;
}

// ---- element kernel ----

namespace assembly {

template <class S>
struct Seeder {
  static S make(double v, int) { return S(v); }
};
template <int N>
struct Seeder<Dual<N>> {
  static Dual<N> make(double v, int i) { return Dual<N>::variable(v, i); }
};
template <int N>
struct Seeder<Jet2<N>> {
  static Jet2<N> make(double v, int i) { return Jet2<N>::variable(v, i); }
};

// Widening from the rotation-stage scalar (differentiating only the 3 n2
// rotation tangents) into the full element scalar; offset is 3 n1.
inline double embed_scalar(double a, int) { return a; }

template <int D, int DR>
inline Dual<D> embed_scalar(const Dual<DR>& a, int offset) {
  Dual<D> r(a.v);
  for (int i = 0; i < DR; ++i) r.g[offset + i] = a.g[i];
  return r;
}

template <int D, int DR>
inline Jet2<D> embed_scalar(const Jet2<DR>& a, int offset) {
  Jet2<D> r(a.v);
  for (int i = 0; i < DR; ++i) r.g[offset + i] = a.g[i];
  int k = 0;
  for (int i = 0; i < DR; ++i) {
    const int row = Jet2<D>::hidx(offset + i, offset + i);
    for (int j = 0; j < DR - i; ++j, ++k) r.h[row + j] = a.h[k];
  }
  return r;
}

template <class S>
struct ScalarDim {
  static constexpr int value = 0;
};
template <int N>
struct ScalarDim<Dual<N>> {
  static constexpr int value = N;
};
template <int N>
struct ScalarDim<Jet2<N>> {
  static constexpr int value = N;
};

// Internal element energy evaluated in scalar type S; the rotation
// interpolation runs in the cheaper scalar SR that differentiates only the
// rotation tangents. Deformation dofs are seeded directly, rotation dofs
// as body tangents of R_i exp(hat(v_i)).
template <class S, class SR>
inline S element_energy(const Problem& pb, int t, const Eigen::Vector3d* def,
                        const Mat3d* rot) {
  const Discretization& d = *pb.disc;
  const int n1 = d.layout1.nodes_per_elem();
  const int n2 = d.layout2.nodes_per_elem();
  const int offset = 3 * n1;

  auto widen = [offset](const auto& a) -> S {
    if constexpr (std::is_same_v<S, double>)
      return a;
    else
      return embed_scalar<ScalarDim<S>::value>(a, offset);
  };

  Vec3<S> def_dofs[6];
  for (int i = 0; i < n1; ++i)
    for (int c = 0; c < 3; ++c) def_dofs[i][c] = Seeder<S>::make(def[i][c], 3 * i + c);

  Mat3<SR> coeffs[6];
  for (int i = 0; i < n2; ++i) {
    if constexpr (std::is_same_v<SR, double>) {
      coeffs[i] = rot[i];
    } else {
      Vec3<SR> v;
      for (int c = 0; c < 3; ++c) v[c] = Seeder<SR>::make(0.0, 3 * i + c);
      coeffs[i] = lift<SR>(rot[i]) * so3::exp_hat_c(v);
    }
  }
  if (d.kind == InterpKind::geodesic) gfe::check_admissible(rot, n2);

  S total(0.0);
  for (const QuadPointData& qp : d.cache[t]) {
    Vec3<S> gm[2] = {Vec3<S>::zero(), Vec3<S>::zero()};
    for (int i = 0; i < n1; ++i)
      for (int alpha = 0; alpha < 2; ++alpha)
        gm[alpha] = gm[alpha] + def_dofs[i] * qp.dlam1[i][alpha];

    const auto interp = gfe::evaluate(d.kind, coeffs, qp.lam2, qp.dlam2, n2, true);

    // the bending part depends on the rotation tangents only
    const Mat3<SR> ke_r =
        outer(-interp.u[0], qp.acon[0]) + outer(-interp.u[1], qp.acon[1]);
    const SR bend = bending_density(ke_r, qp.geom, pb.material);

    Mat3<S> qt, ke;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        qt(i, j) = widen(interp.q(j, i));
        ke(i, j) = widen(ke_r(i, j));
      }

    // E = Q^T dm (x) a^alpha - a;  K = axl(Q^T dQ) (x) a^alpha = -u (x) a^alpha
    const Mat3<S> ee =
        outer(qt * gm[0], qp.acon[0]) + outer(qt * gm[1], qp.acon[1]) - lift<S>(qp.geom.a);

    const S density = membrane_density(ee, ke, qp.geom, pb.material, pb.variant) + widen(bend);
    total = total + qp.weight_darea * density;
  }
  return total;
}

struct ElementDofs {
  Eigen::Vector3d def[6];
  Mat3d rot[6];
};

inline void gather(const Problem& pb, const Configuration& c, int t, ElementDofs& e) {
  const Discretization& d = *pb.disc;
  for (int i = 0; i < d.layout1.nodes_per_elem(); ++i)
    e.def[i] = c.deformation[d.layout1.elem_nodes[t][i]];
  for (int i = 0; i < d.layout2.nodes_per_elem(); ++i)
    e.rot[i] = from_eigen(c.rotations[d.layout2.elem_nodes[t][i]].matrix());
}

inline double element_energy_value(const Problem& pb, int t, const ElementDofs& e) {
  return element_energy<double, double>(pb, t, e.def, e.rot);
}

template <int D, int DR>
inline void element_gradient(const Problem& pb, int t, const ElementDofs& e, double* grad) {
  const Dual<D> r = element_energy<Dual<D>, Dual<DR>>(pb, t, e.def, e.rot);
  for (int i = 0; i < D; ++i) grad[i] = r.g[i];
}

template <int D, int DR>
inline void element_hessian(const Problem& pb, int t, const ElementDofs& e, double* value,
                            double* grad, double* hess) {
  const Jet2<D> r = element_energy<Jet2<D>, Jet2<DR>>(pb, t, e.def, e.rot);
  *value = r.v;
  for (int i = 0; i < D; ++i) grad[i] = r.g[i];
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      const double v = r.h[Jet2<D>::hidx(i, j)];
      hess[i * D + j] = v;
      hess[j * D + i] = v;
    }
}

// dispatch on the element layout sizes (n1, n2) in {3, 6}^2
template <class F>
inline void dispatch_element(const Discretization& d, F&& f) {
  const int n1 = d.layout1.nodes_per_elem(), n2 = d.layout2.nodes_per_elem();
  if (n1 == 3 && n2 == 3) f(std::integral_constant<int, 18>{}, std::integral_constant<int, 9>{});
  else if (n1 == 6 && n2 == 3) f(std::integral_constant<int, 27>{}, std::integral_constant<int, 9>{});
  else if (n1 == 3 && n2 == 6) f(std::integral_constant<int, 27>{}, std::integral_constant<int, 18>{});
  else if (n1 == 6 && n2 == 6) f(std::integral_constant<int, 36>{}, std::integral_constant<int, 18>{});
  else throw Error("unsupported element size");
}

// global dof indices of the element's local dofs, deformation block first
inline void element_dof_map(const Discretization& d, int t, int* map, int& count) {
  const int n1 = d.layout1.nodes_per_elem(), n2 = d.layout2.nodes_per_elem();
  count = 3 * (n1 + n2);
  for (int i = 0; i < n1; ++i)
    for (int c = 0; c < 3; ++c) map[3 * i + c] = 3 * d.layout1.elem_nodes[t][i] + c;
  const int off = d.rotation_offset();
  for (int i = 0; i < n2; ++i)
    for (int c = 0; c < 3; ++c)
      map[3 * n1 + 3 * i + c] = off + 3 * d.layout2.elem_nodes[t][i] + c;
}

}  // namespace assembly

// ---- sparse matrix ----

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr, col;
  std::vector<double> val;

  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(n);
    parallel_for(n, [&](int i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    });
  }

  int find(int i, int j) const {
    int lo = row_ptr[i], hi = row_ptr[i + 1];
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (col[mid] < j)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }
};

// ---- global assembly ----

inline double internal_energy(const Problem& pb, const Configuration& config) {
  const int nt = pb.disc->mesh->num_triangles();
  std::vector<double> per_element(nt);
  std::exception_ptr error;
  parallel_for(nt, [&](int t) {
    try {
      assembly::ElementDofs e;
      assembly::gather(pb, config, t, e);
      per_element[t] = assembly::element_energy_value(pb, t, e);
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);
  double sum = 0.0;
  for (double v : per_element) sum += v;
  return sum;
}

inline double total_energy(const Problem& pb, const Configuration& config) {
  return internal_energy(pb, config) - external_potential(pb.loads, config);
}

inline Eigen::VectorXd gradient(const Problem& pb, const Configuration& config) {
  const Discretization& d = *pb.disc;
  const int nt = d.mesh->num_triangles();
  const int dmax = 3 * (d.layout1.nodes_per_elem() + d.layout2.nodes_per_elem());
  std::vector<double> buffers(static_cast<size_t>(nt) * dmax);
  std::exception_ptr error;
  parallel_for(nt, [&](int t) {
    try {
      assembly::ElementDofs e;
      assembly::gather(pb, config, t, e);
      double* out = buffers.data() + static_cast<size_t>(t) * dmax;
      assembly::dispatch_element(d, [&](auto dc, auto drc) {
        assembly::element_gradient<dc.value, drc.value>(pb, t, e, out);
      });
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(d.num_dofs());
  int map[36], count;
  for (int t = 0; t < nt; ++t) {
    assembly::element_dof_map(d, t, map, count);
    const double* buf = buffers.data() + static_cast<size_t>(t) * dmax;
    for (int i = 0; i < count; ++i) g[map[i]] += buf[i];
  }
  if (!pb.loads.empty) g.head(pb.loads.force.size()) -= pb.loads.force;
  apply_mask(pb.mask, g);
  return g;
}

// Sparsity pattern of the Hessian: node pairs sharing a triangle.
inline CsrMatrix hessian_pattern(const Discretization& d) {
  CsrMatrix m;
  m.n = d.num_dofs();
  std::vector<std::vector<int>> cols(m.n);
  int map[36], count;
  for (int t = 0; t < d.mesh->num_triangles(); ++t) {
    assembly::element_dof_map(d, t, map, count);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < count; ++j) cols[map[i]].push_back(map[j]);
  }
  m.row_ptr.resize(m.n + 1, 0);
  for (int i = 0; i < m.n; ++i) {
    auto& c = cols[i];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    m.row_ptr[i + 1] = m.row_ptr[i] + static_cast<int>(c.size());
  }
  m.col.reserve(m.row_ptr[m.n]);
  for (const auto& c : cols) m.col.insert(m.col.end(), c.begin(), c.end());
  m.val.assign(m.col.size(), 0.0);
  return m;
}

// Hessian of the total energy (the external potential is linear and drops
// out). The same sweep also yields the gradient and the total energy.
inline void hessian(const Problem& pb, const Configuration& config, CsrMatrix& h,
                    Eigen::VectorXd* grad_out = nullptr, double* energy_out = nullptr) {
  const Discretization& d = *pb.disc;
  const int nt = d.mesh->num_triangles();
  const int dmax = 3 * (d.layout1.nodes_per_elem() + d.layout2.nodes_per_elem());
  std::vector<double> ebuf(nt);
  std::vector<double> gbuf(static_cast<size_t>(nt) * dmax);
  std::vector<double> hbuf(static_cast<size_t>(nt) * dmax * dmax);
  std::exception_ptr error;
  parallel_for(nt, [&](int t) {
    try {
      assembly::ElementDofs e;
      assembly::gather(pb, config, t, e);
      double* g = gbuf.data() + static_cast<size_t>(t) * dmax;
      double* hh = hbuf.data() + static_cast<size_t>(t) * dmax * dmax;
      assembly::dispatch_element(d, [&](auto dc, auto drc) {
        assembly::element_hessian<dc.value, drc.value>(pb, t, e, &ebuf[t], g, hh);
      });
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);

  if (h.n != d.num_dofs()) h = hessian_pattern(d);
  std::fill(h.val.begin(), h.val.end(), 0.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d.num_dofs());
  int map[36], count;
  for (int t = 0; t < nt; ++t) {
    assembly::element_dof_map(d, t, map, count);
    const double* gb = gbuf.data() + static_cast<size_t>(t) * dmax;
    const double* hb = hbuf.data() + static_cast<size_t>(t) * dmax * dmax;
    for (int i = 0; i < count; ++i) {
      g[map[i]] += gb[i];
      for (int j = 0; j < count; ++j) h.val[h.find(map[i], map[j])] += hb[i * dmax + j];
    }
  }
  if (energy_out) {
    double sum = 0.0;
    for (double v : ebuf) sum += v;
    *energy_out = sum - external_potential(pb.loads, config);
  }
  if (grad_out) {
    if (!pb.loads.empty) g.head(pb.loads.force.size()) -= pb.loads.force;
    apply_mask(pb.mask, g);
    *grad_out = std::move(g);
  }
}

}  // namespace cosshell
