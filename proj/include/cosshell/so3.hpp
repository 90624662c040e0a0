#pragma once

// Rotation-group algebra with the axl convention locked repo-wide:
// for a skew matrix A, axl(A) = (A_23, A_31, A_12). This differs in sign
// from the cross-product convention (A_32, A_13, A_21), which is used
// internally and called "_c" below. exp_map/log_map use the geometric
// rotation-vector convention (right-hand rotation about v by |v|).

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "errors.hpp"
#include "jet.hpp"
#include "smat.hpp"

namespace cosshell {

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

namespace so3 {

template <class S>
inline Mat3<S> hat_c(const Vec3<S>& v) {
  Mat3<S> a = Mat3<S>::zero();
  a(0, 1) = -v[2];
  a(0, 2) = v[1];
  a(1, 0) = v[2];
  a(1, 2) = -v[0];
  a(2, 0) = -v[1];
  a(2, 1) = v[0];
  return a;
}

template <class S>
inline Vec3<S> axl_c_of_skew(const Mat3<S>& a) {
  return {{0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)),
           0.5 * (a(1, 0) - a(0, 1))}};
}

// Rodrigues formula; the small-angle branch keeps the map smooth through 0.
template <class S>
inline Mat3<S> exp_hat_c(const Vec3<S>& v) {
  const S t2 = dot(v, v);
  S alpha, beta;
  if (value_of(t2) < 1e-8) {
    alpha = 1.0 - t2 * (1.0 / 6.0) * (1.0 - t2 * (1.0 / 20.0) * (1.0 - t2 * (1.0 / 42.0)));
    beta = 0.5 * (1.0 - t2 * (1.0 / 12.0) * (1.0 - t2 * (1.0 / 30.0) * (1.0 - t2 * (1.0 / 56.0))));
  } else {
    const S t = sqrt(t2);
    alpha = sin(t) / t;
    beta = (1.0 - cos(t)) / t2;
  }
  const Mat3<S> k = hat_c(v);
  return Mat3<S>::identity() + alpha * k + beta * (k * k);
}

// Rotation vector of R; valid for angles well below pi. Kernels only see
// angles below pi/2 + admissibility slack, public callers go through
// log_map which adds the near-pi branches.
template <class S>
inline Vec3<S> log_vee_c(const Mat3<S>& r) {
  const Vec3<S> s = axl_c_of_skew(r);       // sin(theta) * axis
  const S c = 0.5 * (trace(r) - 1.0);       // cos(theta)
  S f;                                      // theta / sin(theta)
  if (value_of(c) > 0.9999) {
    const S u = 1.0 - c;
    f = 1.0 + u * (1.0 / 3.0) + u * u * (2.0 / 15.0) + u * u * u * (2.0 / 35.0);
  } else {
    const S sn = sqrt(dot(s, s));
    const S theta = atan2(sn, c);
    f = theta / sn;
  }
  return f * s;
}

// Inverse right Jacobian of the exponential: d/dt log(exp(w^) exp(t h^)) = Jr^-1(w) h.
template <class S>
inline Mat3<S> jr_inv(const Vec3<S>& w) {
  const S t2 = dot(w, w);
  S c2;
  if (value_of(t2) < 1e-4) {
    c2 = 1.0 / 12.0 + t2 * (1.0 / 720.0) + t2 * t2 * (1.0 / 30240.0);
  } else {
    const S t = sqrt(t2);
    c2 = 1.0 / t2 - (1.0 + cos(t)) / (2.0 * t * sin(t));
  }
  const Mat3<S> k = hat_c(w);
  return Mat3<S>::identity() + 0.5 * k + c2 * (k * k);
}

inline double frobenius_norm(const Mat3d& m) { return std::sqrt(squared_norm(m)); }

// One Newton step towards the orthogonal factor; restores orthonormality of
// a slightly drifted rotation matrix quadratically.
inline Mat3d reorthonormalize(const Mat3d& m) {
  const Mat3d mi = inverse(m);
  return 0.5 * (m + transpose(mi));
}

// Orthogonal polar factor by the scaled Newton iteration
// X <- (alpha X + alpha^-1 X^-T) / 2 with Frobenius-norm scaling.
// Guaranteed tolerance 1e-14 within 30 iterations; in practice the
// quadratic convergence runs it down to the floating-point fixed point.
inline Mat3d polar_mat(const Mat3d& f) {
  const double nf = frobenius_norm(f);
  if (det(f) <= 1e-14 * nf * nf * nf) throw NonPositiveDeterminant();
  Mat3d x = f;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 30; ++it) {
    const Mat3d xinv = inverse(x);
    double alpha = std::sqrt(frobenius_norm(xinv) / frobenius_norm(x));
    const Mat3d xn = 0.5 * (alpha * x + (1.0 / alpha) * transpose(xinv));
    const double delta = frobenius_norm(xn - x);
    x = xn;
    if (delta <= 1e-16 || (delta <= 1e-14 && delta >= 0.5 * prev)) break;
    prev = delta;
  }
  return x;
}

// Angle of the rotation, in [0, pi]; needs no axis extraction.
inline double angle_of(const Mat3d& r) {
  const Vec3d s = axl_c_of_skew(r);
  const double sn = std::sqrt(dot(s, s));
  const double c = 0.5 * (trace(r) - 1.0);
  return std::atan2(sn, c);
}

// Rotation vector with near-pi handling; throws AngleAtPi within 1e-8 of pi.
inline Vec3d log_vee_robust(const Mat3d& r) {
  const Vec3d s = axl_c_of_skew(r);
  const double sn = std::sqrt(dot(s, s));
  const double c = 0.5 * (trace(r) - 1.0);
  const double theta = std::atan2(sn, c);
  constexpr double pi = 3.14159265358979323846;
  if (theta > pi - 1e-8) throw AngleAtPi();
  if (theta < pi - 1e-4) return log_vee_c(r);
  // near pi: recover the axis from the symmetric part, sign from the skew part
  const double omc = 1.0 - c;
  Mat3d aa;  // axis axis^T
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      aa(i, j) = (0.5 * (r(i, j) + r(j, i)) - (i == j ? c : 0.0)) / omc;
  int jmax = 0;
  for (int j = 1; j < 3; ++j)
    if (aa(j, j) > aa(jmax, jmax)) jmax = j;
  Vec3d axis = {{aa(0, jmax), aa(1, jmax), aa(2, jmax)}};
  axis = axis * (1.0 / std::sqrt(aa(jmax, jmax)));
  if (dot(axis, s) < 0.0) axis = -axis;
  return theta * axis;
}

}  // namespace so3

// Skew-symmetric 3x3 matrix, stored via its three independent entries in
// the axl convention (A_23, A_31, A_12).
class Skew3 {
 public:
  Skew3() : w_(Eigen::Vector3d::Zero()) {}
  explicit Skew3(const Eigen::Vector3d& axial) : w_(axial) {}

  static Skew3 from_matrix(const Eigen::Matrix3d& a) {
    return Skew3(Eigen::Vector3d(0.5 * (a(1, 2) - a(2, 1)),
                                 0.5 * (a(2, 0) - a(0, 2)),
                                 0.5 * (a(0, 1) - a(1, 0))));
  }

  const Eigen::Vector3d& axial() const { return w_; }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d a;
    a << 0.0, w_[2], -w_[1],
        -w_[2], 0.0, w_[0],
        w_[1], -w_[0], 0.0;
    return a;
  }

 private:
  Eigen::Vector3d w_;  // (A_23, A_31, A_12)
};

inline Eigen::Vector3d axl(const Skew3& a) { return a.axial(); }
inline Skew3 hat(const Eigen::Vector3d& v) { return Skew3(v); }

// Element of SO(3). Stores an orthonormal matrix; composition renormalizes
// so that the orthonormality invariant survives long products.
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}

  static Rotation identity() { return Rotation(); }

  // Validates the invariants |M^T M - I| <= 1e-12 and det M > 0.
  static Rotation from_matrix(const Eigen::Matrix3d& m) {
    const double drift = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
    if (!(drift <= 1e-12) || !(m.determinant() > 0.0))
      throw Error("matrix is not a rotation (drift " + std::to_string(drift) + ")");
    Rotation r;
    r.m_ = m;
    return r;
  }

  // Trusted constructor for matrices known orthonormal up to roundoff.
  static Rotation from_matrix_unchecked(const Eigen::Matrix3d& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Eigen::Matrix3d& matrix() const { return m_; }

  Rotation transposed() const { return from_matrix_unchecked(m_.transpose()); }

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    Mat3d p = from_eigen(Eigen::Matrix3d(a.m_ * b.m_));
    return from_matrix_unchecked(to_eigen(so3::reorthonormalize(p)));
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

 private:
  Eigen::Matrix3d m_;
};

inline Rotation exp_map(const Eigen::Vector3d& v) {
  return Rotation::from_matrix_unchecked(to_eigen(so3::exp_hat_c(from_eigen(v))));
}

inline Eigen::Vector3d log_map(const Rotation& q) {
  return to_eigen(so3::log_vee_robust(from_eigen(q.matrix())));
}

inline double geodesic_distance(const Rotation& q1, const Rotation& q2) {
  const Mat3d rel = from_eigen(q1.matrix()) * transpose(from_eigen(q2.matrix()));
  return so3::angle_of(rel);
}

inline Rotation polar(const Eigen::Matrix3d& f) {
  return Rotation::from_matrix_unchecked(to_eigen(so3::polar_mat(from_eigen(f))));
}

// Directional derivative of the polar map at F in direction dF.
// With R = polar(F), U = R^T F, the rotation part dR = R hat(omega) solves
// (tr(U) I - U) omega = 2 axl(skew(R^T dF)).
inline Eigen::Matrix3d polar_differential(const Eigen::Matrix3d& f,
                                          const Eigen::Matrix3d& df) {
  const Mat3d fm = from_eigen(f);
  const Mat3d r = so3::polar_mat(fm);
  const Mat3d u = transpose(r) * fm;
  const Mat3d rtdf = transpose(r) * from_eigen(df);
  const Vec3d rhs = 2.0 * so3::axl_c_of_skew(rtdf);
  Mat3d lhs = trace(u) * Mat3d::identity() - u;
  const Vec3d omega = solve3(lhs, rhs);
  return to_eigen(r * so3::hat_c(omega));
}

}  // namespace cosshell
