#pragma once

// Geometric finite element interpolation of SO(3)-valued nodal data.
//
// Both rules are characterized by a 3-dimensional first-order condition
// r(Q) = 0 in the body frame:
//   geodesic:    r(Q) = sum_i lambda_i log(Q^T R_i)
//   projection:  r(Q) = axl(skew(Q^T sum_i lambda_i R_i))
// The primal value is found by Newton (geodesic) or the matrix polar
// iteration (projection). Derivatives with respect to the evaluation point
// and to the coefficients come from implicit differentiation of r = 0; for
// jet scalars this is realized as a few Newton steps at the converged
// primal value with a frozen Jacobian, which reproduces the exact first
// and second order Taylor expansion.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "jet.hpp"
#include "mesh.hpp"
#include "smat.hpp"
#include "so3.hpp"

namespace cosshell {

enum class InterpKind { geodesic, projection };

struct RotationField {
  const LagrangeLayout* layout = nullptr;
  InterpKind kind = InterpKind::geodesic;
  std::vector<Rotation> values;
};

namespace gfe {

constexpr int kMaxCoefficients = 10;
constexpr double kAdmissibleSpread = 1.5707963267948966 + 1e-9;  // pi/2

inline void check_admissible(const Mat3d* coeffs, int m) {
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (!(so3::angle_of(transpose(coeffs[i]) * coeffs[j]) <= kAdmissibleSpread))
        throw CoefficientsTooSpread();
}

template <class S>
inline Mat3<S> blend(const Mat3<S>* coeffs, const double* lam, int m) {
  Mat3<S> sum = coeffs[0] * lam[0];
  for (int i = 1; i < m; ++i) sum = sum + coeffs[i] * lam[i];
  return sum;
}

template <class S>
inline Vec3<S> residual(InterpKind kind, const Mat3<S>& q, const Mat3<S>* coeffs,
                        const double* lam, int m) {
  if (kind == InterpKind::projection)
    return so3::axl_c_of_skew(transpose(q) * blend(coeffs, lam, m));
  Vec3<S> r = Vec3<S>::zero();
  for (int i = 0; i < m; ++i)
    r = r + lam[i] * so3::log_vee_c(transpose(q) * coeffs[i]);
  return r;
}

// rows of hat_c(e_k) * A without forming the product
template <class S>
inline Vec3<S> axl_skew_hat_row(const Mat3<S>& a, int k) {
  Mat3<S> ha = Mat3<S>::zero();
  const int r0[3] = {2, 0, 1}, r1[3] = {1, 2, 0};
  // hat_c(e_k) A has row r1[k] = -A.row(r0[k]) and row r0[k] = A.row(r1[k])
  for (int j = 0; j < 3; ++j) {
    ha(r1[k], j) = -a(r0[k], j);
    ha(r0[k], j) = a(r1[k], j);
  }
  return so3::axl_c_of_skew(ha);
}

// Jacobian of the residual with respect to a body perturbation Q exp(t w^).
template <class S>
inline Mat3<S> residual_jacobian(InterpKind kind, const Mat3<S>& q, const Mat3<S>* coeffs,
                                 const double* lam, int m) {
  Mat3<S> jac = Mat3<S>::zero();
  if (kind == InterpKind::projection) {
    const Mat3<S> a = transpose(q) * blend(coeffs, lam, m);
    for (int k = 0; k < 3; ++k) {
      const Vec3<S> col = -1.0 * axl_skew_hat_row(a, k);
      for (int r = 0; r < 3; ++r) jac(r, k) = col[r];
    }
    return jac;
  }
  for (int i = 0; i < m; ++i) {
    const Mat3<S> bi = transpose(q) * coeffs[i];
    const Mat3<S> ji = so3::jr_inv(so3::log_vee_c(bi)) * transpose(bi);
    jac = jac - lam[i] * ji;
  }
  return jac;
}

inline Mat3d primal_projection(const Mat3d* coeffs, const double* lam, int m) {
  try {
    return so3::polar_mat(blend(coeffs, lam, m));
  } catch (const NonPositiveDeterminant&) {
    throw CoefficientsTooSpread();
  }
}

inline Mat3d primal_geodesic(const Mat3d* coeffs, const double* lam, int m) {
  int start = 0;
  for (int i = 1; i < m; ++i)
    if (lam[i] > lam[start]) start = i;

  for (int attempt = 0; attempt < 2; ++attempt) {
    Mat3d q = attempt == 0 ? coeffs[start] : primal_projection(coeffs, lam, m);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 50; ++it) {
      const Vec3d r = residual(InterpKind::geodesic, q, coeffs, lam, m);
      const double rnorm = std::sqrt(dot(r, r));
      // iterate to the floating-point floor of the first-order condition
      if (rnorm <= 1e-15 || (rnorm <= 1e-12 && rnorm >= 0.5 * prev))
        return so3::reorthonormalize(q);
      prev = rnorm;
      const Mat3d jac = residual_jacobian(InterpKind::geodesic, q, coeffs, lam, m);
      const Vec3d delta = solve3(jac, -r);
      q = q * so3::exp_hat_c(delta);
      if (it % 8 == 7) q = so3::reorthonormalize(q);
    }
  }
  throw NoConvergence("geodesic interpolation Newton did not converge in 50 iterations");
}

template <class S>
struct InterpEval {
  Mat3<S> q;
  Vec3<S> u[2];  // Q^T dQ/dx_alpha = hat_c(u[alpha])
};

template <class S>
inline Mat3d value_of(const Mat3<S>& m) {
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = cosshell::value_of(m(i, j));
  return r;
}

// Exponential truncated after the quadratic term. Used only for the jet
// Newton polish, where the value part of the argument is at roundoff level
// and the cubic tail vanishes identically in second-order jet arithmetic.
template <class S>
inline Mat3<S> exp_hat_quadratic(const Vec3<S>& v) {
  const Mat3<S> k = so3::hat_c(v);
  return Mat3<S>::identity() + k + 0.5 * (k * k);
}

// Interpolated rotation and, optionally, its body-frame derivatives with
// respect to the evaluation point. dlam holds the shape function gradients.
template <class S>
inline InterpEval<S> evaluate(InterpKind kind, const Mat3<S>* coeffs, const double* lam,
                              const Eigen::Vector2d* dlam, int m, bool want_derivatives) {
  InterpEval<S> out;

  Mat3d primal_coeffs[kMaxCoefficients];
  for (int i = 0; i < m; ++i) primal_coeffs[i] = value_of(coeffs[i]);
  const Mat3d q0 = kind == InterpKind::projection ? primal_projection(primal_coeffs, lam, m)
                                                  : primal_geodesic(primal_coeffs, lam, m);

  if constexpr (std::is_same_v<S, double>) {
    out.q = q0;
  } else {
    // implicit differentiation: two Newton steps at the converged primal
    // value with the frozen primal Jacobian settle the jet parts exactly
    const Mat3d jac0 = residual_jacobian(kind, q0, primal_coeffs, lam, m);
    const Mat3d jac0_inv = inverse(jac0);
    out.q = lift<S>(q0);
    for (int step = 0; step < 2; ++step) {
      const Vec3<S> r = residual(kind, out.q, coeffs, lam, m);
      const Vec3<S> delta = -1.0 * (jac0_inv * r);
      out.q = out.q * exp_hat_quadratic(delta);
    }
  }

  if (!want_derivatives) return out;

  if (kind == InterpKind::projection) {
    const Mat3<S> jac = residual_jacobian(kind, out.q, coeffs, lam, m);
    const Mat3<S> jac_inv = inverse(jac);
    for (int alpha = 0; alpha < 2; ++alpha) {
      Mat3<S> mgrad = Mat3<S>::zero();
      for (int i = 0; i < m; ++i) mgrad = mgrad + coeffs[i] * dlam[i][alpha];
      const Vec3<S> s = so3::axl_c_of_skew(transpose(out.q) * mgrad);
      out.u[alpha] = -1.0 * (jac_inv * s);
    }
  } else {
    // share B_i and the logs between the Jacobian and the right-hand sides
    const Mat3<S> qt = transpose(out.q);
    Mat3<S> jac = Mat3<S>::zero();
    Vec3<S> w[kMaxCoefficients];
    for (int i = 0; i < m; ++i) {
      const Mat3<S> bi = qt * coeffs[i];
      w[i] = so3::log_vee_c(bi);
      jac = jac - lam[i] * (so3::jr_inv(w[i]) * transpose(bi));
    }
    const Mat3<S> jac_inv = inverse(jac);
    for (int alpha = 0; alpha < 2; ++alpha) {
      Vec3<S> s = Vec3<S>::zero();
      for (int i = 0; i < m; ++i) s = s + dlam[i][alpha] * w[i];
      out.u[alpha] = -1.0 * (jac_inv * s);
    }
  }
  return out;
}

}  // namespace gfe

// ---- double-facing operations ----

inline Rotation interp_projection(std::span<const Rotation> coeffs, std::span<const double> weights) {
  const int m = static_cast<int>(coeffs.size());
  Mat3d c[gfe::kMaxCoefficients];
  for (int i = 0; i < m; ++i) c[i] = from_eigen(coeffs[i].matrix());
  return Rotation::from_matrix_unchecked(to_eigen(gfe::primal_projection(c, weights.data(), m)));
}

inline Rotation interp_geodesic(std::span<const Rotation> coeffs, std::span<const double> weights) {
  const int m = static_cast<int>(coeffs.size());
  Mat3d c[gfe::kMaxCoefficients];
  for (int i = 0; i < m; ++i) c[i] = from_eigen(coeffs[i].matrix());
  gfe::check_admissible(c, m);
  return Rotation::from_matrix_unchecked(to_eigen(gfe::primal_geodesic(c, weights.data(), m)));
}

struct InterpJacobian {
  Rotation value;
  Skew3 d1, d2;  // Q^T dQ/dx_alpha
};

namespace gfe {

inline void gather_local(const RotationField& field, int triangle, const Eigen::Vector2d& x,
                         Mat3d* coeffs, std::vector<double>& lam,
                         std::vector<Eigen::Vector2d>& dlam) {
  const LagrangeLayout& lay = *field.layout;
  shape_functions(lay.order, x, lam, dlam);
  for (int i = 0; i < lay.nodes_per_elem(); ++i)
    coeffs[i] = from_eigen(field.values[lay.elem_nodes[triangle][i]].matrix());
}

}  // namespace gfe

inline InterpJacobian interp_jacobian(const RotationField& field, int triangle,
                                      const Eigen::Vector2d& x) {
  Mat3d coeffs[gfe::kMaxCoefficients];
  std::vector<double> lam;
  std::vector<Eigen::Vector2d> dlam;
  gfe::gather_local(field, triangle, x, coeffs, lam, dlam);
  const int m = static_cast<int>(lam.size());
  if (field.kind == InterpKind::geodesic) gfe::check_admissible(coeffs, m);
  const auto eval = gfe::evaluate(field.kind, coeffs, lam.data(), dlam.data(), m, true);
  InterpJacobian out;
  out.value = Rotation::from_matrix_unchecked(to_eigen(eval.q));
  out.d1 = Skew3::from_matrix(to_eigen(so3::hat_c(eval.u[0])));
  out.d2 = Skew3::from_matrix(to_eigen(so3::hat_c(eval.u[1])));
  return out;
}

// Derivative of the interpolated value with respect to coefficient
// local_node: the 3x3 matrix maps a body tangent v at R_i (perturbation
// R_i exp(t v^)) to the body tangent of Q.
inline Eigen::Matrix3d interp_coefficient_derivative(const RotationField& field, int triangle,
                                                     const Eigen::Vector2d& x, int local_node) {
  using D = Dual<3>;
  Mat3d coeffs[gfe::kMaxCoefficients];
  std::vector<double> lam;
  std::vector<Eigen::Vector2d> dlam;
  gfe::gather_local(field, triangle, x, coeffs, lam, dlam);
  const int m = static_cast<int>(lam.size());
  if (field.kind == InterpKind::geodesic) gfe::check_admissible(coeffs, m);

  Mat3<D> dual_coeffs[gfe::kMaxCoefficients];
  for (int i = 0; i < m; ++i) dual_coeffs[i] = lift<D>(coeffs[i]);
  const Vec3<D> v = {{D::variable(0.0, 0), D::variable(0.0, 1), D::variable(0.0, 2)}};
  dual_coeffs[local_node] = dual_coeffs[local_node] * so3::exp_hat_c(v);

  const auto eval = gfe::evaluate(field.kind, dual_coeffs, lam.data(), dlam.data(), m, false);
  const Mat3d q0 = gfe::value_of(eval.q);

  Eigen::Matrix3d map;
  for (int k = 0; k < 3; ++k) {
    Mat3d dq;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dq(i, j) = eval.q(i, j).g[k];
    map.col(k) = to_eigen(so3::axl_c_of_skew(transpose(q0) * dq));
  }
  return map;
}

}  // namespace cosshell
