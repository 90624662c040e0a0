#pragma once

// Small fixed-size vectors/matrices templated on the scalar type.
// The element kernels run these with plain double, first-order duals and
// second-order jets, so everything here must stay scalar-generic.

#include <array>
#include <cmath>
#include <type_traits>

#include <Eigen/Dense>

namespace cosshell {

template <class S>
struct Vec2 {
  S x[2];
  S& operator[](int i) { return x[i]; }
  const S& operator[](int i) const { return x[i]; }
};

template <class S>
struct Vec3 {
  S x[3];
  S& operator[](int i) { return x[i]; }
  const S& operator[](int i) const { return x[i]; }

  static Vec3 zero() { return Vec3{{S(0), S(0), S(0)}}; }
};

template <class S>
struct Mat3 {
  S a[3][3];
  S& operator()(int i, int j) { return a[i][j]; }
  const S& operator()(int i, int j) const { return a[i][j]; }

  static Mat3 zero() {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m.a[i][j] = S(0);
    return m;
  }
  static Mat3 identity() {
    Mat3 m = zero();
    m.a[0][0] = m.a[1][1] = m.a[2][2] = S(1);
    return m;
  }
};

// 3x2 matrix stored as two column vectors; holds surface Jacobians.
template <class S>
struct Mat32 {
  Vec3<S> col[2];
};

template <class A, class B>
using Promote = decltype(std::declval<A>() * std::declval<B>());

// ---- vector ops ----

template <class A, class B>
inline Vec3<Promote<A, B>> operator+(const Vec3<A>& u, const Vec3<B>& v) {
  return {{u[0] + v[0], u[1] + v[1], u[2] + v[2]}};
}

template <class A, class B>
inline Vec3<Promote<A, B>> operator-(const Vec3<A>& u, const Vec3<B>& v) {
  return {{u[0] - v[0], u[1] - v[1], u[2] - v[2]}};
}

template <class A>
inline Vec3<A> operator-(const Vec3<A>& u) {
  return {{-u[0], -u[1], -u[2]}};
}

template <class A, class B>
inline Vec3<Promote<A, B>> operator*(const B& s, const Vec3<A>& u) {
  return {{s * u[0], s * u[1], s * u[2]}};
}

template <class A, class B>
inline Vec3<Promote<A, B>> operator*(const Vec3<A>& u, const B& s) {
  return s * u;
}

template <class A, class B>
inline Promote<A, B> dot(const Vec3<A>& u, const Vec3<B>& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}

template <class A, class B>
inline Vec3<Promote<A, B>> cross(const Vec3<A>& u, const Vec3<B>& v) {
  return {{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
           u[0] * v[1] - u[1] * v[0]}};
}

template <class A>
inline A squared_norm(const Vec3<A>& u) {
  return dot(u, u);
}

// ---- matrix ops ----

template <class A, class B>
inline Mat3<Promote<A, B>> operator+(const Mat3<A>& x, const Mat3<B>& y) {
  Mat3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(i, j) + y(i, j);
  return r;
}

template <class A, class B>
inline Mat3<Promote<A, B>> operator-(const Mat3<A>& x, const Mat3<B>& y) {
  Mat3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(i, j) - y(i, j);
  return r;
}

template <class A>
inline Mat3<A> operator-(const Mat3<A>& x) {
  Mat3<A> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = -x(i, j);
  return r;
}

template <class A, class B>
inline Mat3<Promote<A, B>> operator*(const B& s, const Mat3<A>& x) {
  Mat3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = s * x(i, j);
  return r;
}

template <class A, class B>
inline Mat3<Promote<A, B>> operator*(const Mat3<A>& x, const B& s) {
  return s * x;
}

template <class A, class B>
inline Mat3<Promote<A, B>> operator*(const Mat3<A>& x, const Mat3<B>& y) {
  Mat3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
  return r;
}

template <class A, class B>
inline Vec3<Promote<A, B>> operator*(const Mat3<A>& x, const Vec3<B>& v) {
  Vec3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    r[i] = x(i, 0) * v[0] + x(i, 1) * v[1] + x(i, 2) * v[2];
  return r;
}

// Row-vector product u^T X, returned as a vector.
template <class A, class B>
inline Vec3<Promote<A, B>> left_mul(const Vec3<A>& u, const Mat3<B>& x) {
  Vec3<Promote<A, B>> r;
  for (int j = 0; j < 3; ++j)
    r[j] = u[0] * x(0, j) + u[1] * x(1, j) + u[2] * x(2, j);
  return r;
}

template <class A>
inline Mat3<A> transpose(const Mat3<A>& x) {
  Mat3<A> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(j, i);
  return r;
}

template <class A>
inline A trace(const Mat3<A>& x) {
  return x(0, 0) + x(1, 1) + x(2, 2);
}

template <class A>
inline A det(const Mat3<A>& x) {
  return x(0, 0) * (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) -
         x(0, 1) * (x(1, 0) * x(2, 2) - x(1, 2) * x(2, 0)) +
         x(0, 2) * (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0));
}

template <class A>
inline Mat3<A> adjugate(const Mat3<A>& x) {
  Mat3<A> r;
  r(0, 0) = x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1);
  r(0, 1) = x(0, 2) * x(2, 1) - x(0, 1) * x(2, 2);
  r(0, 2) = x(0, 1) * x(1, 2) - x(0, 2) * x(1, 1);
  r(1, 0) = x(1, 2) * x(2, 0) - x(1, 0) * x(2, 2);
  r(1, 1) = x(0, 0) * x(2, 2) - x(0, 2) * x(2, 0);
  r(1, 2) = x(0, 2) * x(1, 0) - x(0, 0) * x(1, 2);
  r(2, 0) = x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0);
  r(2, 1) = x(0, 1) * x(2, 0) - x(0, 0) * x(2, 1);
  r(2, 2) = x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0);
  return r;
}

template <class A>
inline Mat3<A> inverse(const Mat3<A>& x) {
  const A d = det(x);
  return adjugate(x) * (A(1) / d);
}

// Solves x = A^-1 b by Cramer's rule; fine for the well-conditioned 3x3
// systems appearing in the interpolation Newton steps.
template <class A, class B>
inline Vec3<Promote<A, B>> solve3(const Mat3<A>& m, const Vec3<B>& b) {
  return inverse(m) * b;
}

template <class A, class B>
inline Mat3<Promote<A, B>> outer(const Vec3<A>& u, const Vec3<B>& v) {
  Mat3<Promote<A, B>> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = u[i] * v[j];
  return r;
}

template <class A, class B>
inline Promote<A, B> frobenius(const Mat3<A>& x, const Mat3<B>& y) {
  Promote<A, B> s(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s = s + x(i, j) * y(i, j);
  return s;
}

template <class A>
inline A squared_norm(const Mat3<A>& x) {
  return frobenius(x, x);
}

template <class A>
inline Mat3<A> sym_part(const Mat3<A>& x) {
  Mat3<A> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (x(i, j) + x(j, i));
  return r;
}

template <class A>
inline Mat3<A> skew_part(const Mat3<A>& x) {
  Mat3<A> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (x(i, j) - x(j, i));
  return r;
}

// ---- Eigen interop (double only) ----

inline Vec3<double> from_eigen(const Eigen::Vector3d& v) {
  return {{v[0], v[1], v[2]}};
}

inline Mat3<double> from_eigen(const Eigen::Matrix3d& m) {
  Mat3<double> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

inline Eigen::Vector3d to_eigen(const Vec3<double>& v) {
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

inline Eigen::Matrix3d to_eigen(const Mat3<double>& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

// Copies a double-valued object into scalar type S (jet constants).
template <class S>
inline Vec3<S> lift(const Vec3<double>& v) {
  return {{S(v[0]), S(v[1]), S(v[2])}};
}

template <class S>
inline Mat3<S> lift(const Mat3<double>& m) {
  Mat3<S> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = S(m(i, j));
  return r;
}

}  // namespace cosshell
