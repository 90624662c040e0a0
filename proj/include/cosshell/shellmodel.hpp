#pragma once

// Constitutive pieces of the Cosserat shell: the quadratic/bilinear forms,
// the membrane and bending-curvature densities (main and the alternative
// harmonic-mean variant), strain tensors, and the 3D reconstruction.

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"
#include "jet.hpp"
#include "smat.hpp"
#include "so3.hpp"

namespace cosshell {

struct MaterialParams {
  double lambda = 0;     // Lame first parameter
  double mu = 0;         // shear modulus
  double mu_c = 0;       // Cosserat couple modulus
  double L_c = 0;        // internal length
  double b1 = 1, b2 = 1, b3 = 1.0 / 3.0;
  double thickness = 0;  // h

  double lame_factor() const { return lambda * mu / (lambda + 2.0 * mu); }

  void validate() const {
    if (!(mu > 0.0) || !(mu_c > 0.0) || !(2.0 * lambda + mu > 0.0))
      throw InvalidMaterial("need mu > 0, mu_c > 0 and 2*lambda + mu > 0");
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(b3 > 0.0))
      throw InvalidMaterial("curvature coefficients b1, b2, b3 must be positive");
    if (!(L_c > 0.0)) throw InvalidMaterial("internal length L_c must be positive");
    if (!(thickness > 0.0)) throw InvalidMaterial("thickness must be positive");
  }
};

enum class EnergyVariant { main, birsan };

// ---- quadratic and bilinear forms ----

template <class X, class Y>
inline Promote<X, Y> w_mixt(const Mat3<X>& x, const Mat3<Y>& y, const MaterialParams& m) {
  return m.mu * frobenius(sym_part(x), sym_part(y)) +
         m.mu_c * frobenius(skew_part(x), skew_part(y)) + m.lame_factor() * (trace(x) * trace(y));
}

template <class X>
inline X w_m(const Mat3<X>& x, const MaterialParams& m) {
  return m.mu * squared_norm(sym_part(x)) + m.mu_c * squared_norm(skew_part(x)) +
         m.lame_factor() * (trace(x) * trace(x));
}

template <class X>
inline X w_mp(const Mat3<X>& x, const MaterialParams& m) {
  return m.mu * squared_norm(sym_part(x)) + m.mu_c * squared_norm(skew_part(x)) +
         0.5 * m.lambda * (trace(x) * trace(x));
}

template <class X>
inline X w_curv(const Mat3<X>& x, const MaterialParams& m) {
  const X tr = trace(x);
  Mat3<X> dev_sym = sym_part(x);
  const X third = tr * (1.0 / 3.0);
  for (int i = 0; i < 3; ++i) dev_sym(i, i) = dev_sym(i, i) - third;
  return (m.mu * m.L_c * m.L_c) * (m.b1 * squared_norm(dev_sym) +
                                   m.b2 * squared_norm(skew_part(x)) + m.b3 * (tr * tr));
}

// Alternative transverse-shear coupling: the bilinear form of the
// harmonic-mean membrane energy.
template <class X, class Y, class N>
inline Promote<Promote<X, Y>, N> w_coss(const Mat3<X>& x, const Mat3<Y>& y, const Vec3<N>& n0,
                                        const MaterialParams& m) {
  const double coeff = (m.mu - m.mu_c) * (m.mu - m.mu_c) / (2.0 * (m.mu + m.mu_c));
  return w_mixt(x, y, m) - coeff * dot(left_mul(n0, x), left_mul(n0, y));
}

// ---- densities ----

// Per-point geometry constants the densities need; plain doubles so the
// AD scalars only touch the strain arguments.
struct GeomAtPoint {
  Mat3d a, b, c;
  Vec3d n0;
  double K = 0, H = 0;

  static GeomAtPoint from(const SurfaceGeometry& g) {
    return {from_eigen(g.a), from_eigen(g.b), from_eigen(g.c), from_eigen(g.n0), g.K, g.H};
  }
};

template <class S>
inline S membrane_density(const Mat3<S>& ee, const Mat3<S>& ke, const GeomAtPoint& g,
                          const MaterialParams& m, EnergyVariant variant) {
  const double h = m.thickness;
  const double c1 = h - g.K * h * h * h / 12.0;
  const double c2 = h * h * h / 12.0 - g.K * h * h * h * h * h / 80.0;
  const double c3 = h * h * h / 6.0;
  const double c4 = h * h * h * h * h / 80.0;

  const Mat3<S> cke = g.c * ke;
  const Mat3<S> ebcke = ee * g.b + cke;        // E b + c K
  const Mat3<S> mixt_arg = cke * g.b - (2.0 * g.H) * cke;
  const Mat3<S> ebcke_b = ebcke * g.b;

  if (variant == EnergyVariant::main) {
    return c1 * w_m(ee, m) + c2 * w_m(ebcke, m) + c3 * w_mixt(ee, mixt_arg, m) +
           c4 * w_mp(ebcke_b, m);
  }
  return c1 * w_coss(ee, ee, g.n0, m) + c2 * w_coss(ebcke, ebcke, g.n0, m) +
         c3 * w_coss(ee, mixt_arg, g.n0, m) + c4 * w_coss(ebcke_b, ebcke_b, g.n0, m);
}

template <class S>
inline S bending_density(const Mat3<S>& ke, const GeomAtPoint& g, const MaterialParams& m) {
  const double h = m.thickness;
  const double c1 = h - g.K * h * h * h / 12.0;
  const double c2 = h * h * h / 12.0 - g.K * h * h * h * h * h / 80.0;
  const double c3 = h * h * h * h * h / 80.0;
  return c1 * w_curv(ke, m) + c2 * w_curv(ke * g.b, m) + c3 * w_curv(ke * (g.b * g.b), m);
}

// ---- strain tensors (double-facing API) ----

struct StrainState {
  Eigen::Matrix3d Ee = Eigen::Matrix3d::Zero();  // shell strain tensor
  Eigen::Matrix3d Ke = Eigen::Matrix3d::Zero();  // bending-curvature tensor
};

// E = Q^T dm/dx_a (x) a^a - a,  K = axl(Q^T dQ/dx_a) (x) a^a.
// The skew arguments are the body-frame derivatives Q^T dQ/dx_a.
inline StrainState strain_tensors(const SurfaceGeometry& g,
                                  const Eigen::Matrix<double, 3, 2>& grad_m, const Rotation& q,
                                  const Skew3& body_d1, const Skew3& body_d2) {
  StrainState s;
  const Eigen::Matrix3d qt = q.matrix().transpose();
  s.Ee = (qt * grad_m.col(0)) * g.acon1.transpose() +
         (qt * grad_m.col(1)) * g.acon2.transpose() - g.a;
  s.Ke = axl(body_d1) * g.acon1.transpose() + axl(body_d2) * g.acon2.transpose();
  return s;
}

// double-facing wrappers around the densities

enum class FormKind { m, mp, mixt, coss };

inline double quadratic_forms(FormKind kind, const Eigen::Matrix3d& x, const Eigen::Matrix3d& y,
                              const MaterialParams& m, const Eigen::Vector3d& n0) {
  switch (kind) {
    case FormKind::m: return w_m(from_eigen(x), m);
    case FormKind::mp: return w_mp(from_eigen(x), m);
    case FormKind::mixt: return w_mixt(from_eigen(x), from_eigen(y), m);
    case FormKind::coss: return w_coss(from_eigen(x), from_eigen(y), from_eigen(n0), m);
  }
  return 0.0;
}

inline double w_curv(const Eigen::Matrix3d& x, const MaterialParams& m) {
  return w_curv(from_eigen(x), m);
}

inline double w_memb(const StrainState& s, const SurfaceGeometry& g, const MaterialParams& m,
                     EnergyVariant variant) {
  return membrane_density(from_eigen(s.Ee), from_eigen(s.Ke), GeomAtPoint::from(g), m, variant);
}

inline double w_bend(const StrainState& s, const SurfaceGeometry& g, const MaterialParams& m) {
  return bending_density(from_eigen(s.Ke), GeomAtPoint::from(g), m);
}

// ---- thickness bound h |kappa_i| < 1/2 ----

inline bool thickness_bound_ok(const MaterialParams& m, const SurfaceGeometry& g) {
  return m.thickness * std::abs(g.kappa1) < 0.5 && m.thickness * std::abs(g.kappa2) < 0.5;
}

// ---- 3D reconstruction ----

// phi(x, x3) = m + x3 rho_m d3 + x3^2/2 rho_b d3 with d3 = Q n0,
// rho_m = 1 - lam/(lam+2mu) tr(E), rho_b = -lam/(lam+2mu) tr(E b + c K).
inline Eigen::Vector3d reconstruct(const Eigen::Vector3d& m_point, const Rotation& q,
                                   const StrainState& s, const SurfaceGeometry& g,
                                   const MaterialParams& mat, double x3) {
  const double ratio = mat.lambda / (mat.lambda + 2.0 * mat.mu);
  const double rho_m = 1.0 - ratio * s.Ee.trace();
  const double rho_b = -ratio * (s.Ee * g.b + g.c * s.Ke).trace();
  const Eigen::Vector3d d3 = q.matrix() * g.n0;
  return m_point + (x3 * rho_m + 0.5 * x3 * x3 * rho_b) * d3;
}

}  // namespace cosshell
