#pragma once

// Forward-mode Taylor scalars used to differentiate the element energy.
//
// Dual<N>  carries a value and a dense gradient of length N.
// Jet2<N>  additionally carries the upper triangle of the Hessian.
//
// The element kernels are written once, templated on the scalar, and are
// instantiated with double (energy), Dual (gradient) and Jet2 (Hessian).

#include <array>
#include <cmath>

namespace cosshell {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> g{};

  Dual() = default;
  Dual(double value) : v(value) {}

  static Dual variable(double value, int index) {
    Dual d(value);
    d.g[index] = 1.0;
    return d;
  }
};

template <int N>
struct Jet2 {
  static constexpr int H = N * (N + 1) / 2;
  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, H> h{};

  Jet2() = default;
  Jet2(double value) : v(value) {}

  static Jet2 variable(double value, int index) {
    Jet2 d(value);
    d.g[index] = 1.0;
    return d;
  }

  // packed index of Hessian entry (i, j) with i <= j
  static constexpr int hidx(int i, int j) {
    return i * N - i * (i - 1) / 2 + (j - i);
  }
};

inline double value_of(double x) { return x; }
template <int N>
inline double value_of(const Dual<N>& x) {
  return x.v;
}
template <int N>
inline double value_of(const Jet2<N>& x) {
  return x.v;
}

// ---- Dual arithmetic ----

template <int N>
inline Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v + b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] + b.g[i];
  return r;
}
template <int N>
inline Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v - b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] - b.g[i];
  return r;
}
template <int N>
inline Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r(-a.v);
  for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
  return r;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  return r;
}
template <int N>
inline Dual<N> operator+(const Dual<N>& a, double s) {
  Dual<N> r = a;
  r.v += s;
  return r;
}
template <int N>
inline Dual<N> operator+(double s, const Dual<N>& a) {
  return a + s;
}
template <int N>
inline Dual<N> operator-(const Dual<N>& a, double s) {
  return a + (-s);
}
template <int N>
inline Dual<N> operator-(double s, const Dual<N>& a) {
  return (-a) + s;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, double s) {
  Dual<N> r(a.v * s);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] * s;
  return r;
}
template <int N>
inline Dual<N> operator*(double s, const Dual<N>& a) {
  return a * s;
}
template <int N>
inline Dual<N> operator/(const Dual<N>& a, double s) {
  return a * (1.0 / s);
}

// chain rule for f(a) with derivatives f', applied to first order
template <int N>
inline Dual<N> chain(const Dual<N>& a, double f, double fp) {
  Dual<N> r(f);
  for (int i = 0; i < N; ++i) r.g[i] = fp * a.g[i];
  return r;
}

template <int N>
inline Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  return a * chain(b, 1.0 / b.v, -1.0 / (b.v * b.v));
}
template <int N>
inline Dual<N> operator/(double s, const Dual<N>& b) {
  return chain(b, s / b.v, -s / (b.v * b.v));
}
template <int N>
inline Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int N>
inline Dual<N> sin(const Dual<N>& a) {
  return chain(a, std::sin(a.v), std::cos(a.v));
}
template <int N>
inline Dual<N> cos(const Dual<N>& a) {
  return chain(a, std::cos(a.v), -std::sin(a.v));
}
template <int N>
inline Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int N>
inline Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double d = x.v * x.v + y.v * y.v;
  Dual<N> r(std::atan2(y.v, x.v));
  for (int i = 0; i < N; ++i) r.g[i] = (x.v * y.g[i] - y.v * x.g[i]) / d;
  return r;
}

// ---- Jet2 arithmetic ----

template <int N>
inline Jet2<N> operator+(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a.v + b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] + b.g[i];
  for (int i = 0; i < Jet2<N>::H; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}
template <int N>
inline Jet2<N> operator-(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a.v - b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] - b.g[i];
  for (int i = 0; i < Jet2<N>::H; ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}
template <int N>
inline Jet2<N> operator-(const Jet2<N>& a) {
  Jet2<N> r(-a.v);
  for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
  for (int i = 0; i < Jet2<N>::H; ++i) r.h[i] = -a.h[i];
  return r;
}

template <int N>
inline Jet2<N> operator*(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  int k = 0;
  for (int i = 0; i < N; ++i) {
    const double agi = a.g[i], bgi = b.g[i];
    for (int j = i; j < N; ++j, ++k)
      r.h[k] = a.v * b.h[k] + b.v * a.h[k] + agi * b.g[j] + a.g[j] * bgi;
  }
  return r;
}

template <int N>
inline Jet2<N> operator+(const Jet2<N>& a, double s) {
  Jet2<N> r = a;
  r.v += s;
  return r;
}
template <int N>
inline Jet2<N> operator+(double s, const Jet2<N>& a) {
  return a + s;
}
template <int N>
inline Jet2<N> operator-(const Jet2<N>& a, double s) {
  return a + (-s);
}
template <int N>
inline Jet2<N> operator-(double s, const Jet2<N>& a) {
  return (-a) + s;
}
template <int N>
inline Jet2<N> operator*(const Jet2<N>& a, double s) {
  Jet2<N> r(a.v * s);
  for (int i = 0; i < N; ++i) r.g[i] = a.g[i] * s;
  for (int i = 0; i < Jet2<N>::H; ++i) r.h[i] = a.h[i] * s;
  return r;
}
template <int N>
inline Jet2<N> operator*(double s, const Jet2<N>& a) {
  return a * s;
}
template <int N>
inline Jet2<N> operator/(const Jet2<N>& a, double s) {
  return a * (1.0 / s);
}

// chain rule for f(a) given f, f', f''
template <int N>
inline Jet2<N> chain(const Jet2<N>& a, double f, double fp, double fpp) {
  Jet2<N> r(f);
  for (int i = 0; i < N; ++i) r.g[i] = fp * a.g[i];
  int k = 0;
  for (int i = 0; i < N; ++i) {
    const double agi = a.g[i];
    for (int j = i; j < N; ++j, ++k) r.h[k] = fp * a.h[k] + fpp * agi * a.g[j];
  }
  return r;
}

template <int N>
inline Jet2<N> operator/(const Jet2<N>& a, const Jet2<N>& b) {
  const double iv = 1.0 / b.v;
  return a * chain(b, iv, -iv * iv, 2.0 * iv * iv * iv);
}
template <int N>
inline Jet2<N> operator/(double s, const Jet2<N>& b) {
  const double iv = 1.0 / b.v;
  return chain(b, s * iv, -s * iv * iv, 2.0 * s * iv * iv * iv);
}
template <int N>
inline Jet2<N> sqrt(const Jet2<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N>
inline Jet2<N> sin(const Jet2<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
template <int N>
inline Jet2<N> cos(const Jet2<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
template <int N>
inline Jet2<N> exp(const Jet2<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

template <int N>
inline Jet2<N> atan2(const Jet2<N>& y, const Jet2<N>& x) {
  // treat as f(y, x); compose the two-argument chain rule explicitly
  const double xv = x.v, yv = y.v;
  const double d = xv * xv + yv * yv;
  const double fy = xv / d, fx = -yv / d;
  const double fyy = -2.0 * xv * yv / (d * d);
  const double fxx = 2.0 * xv * yv / (d * d);
  const double fxy = (yv * yv - xv * xv) / (d * d);
  Jet2<N> r(std::atan2(yv, xv));
  for (int i = 0; i < N; ++i) r.g[i] = fy * y.g[i] + fx * x.g[i];
  int k = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i; j < N; ++j, ++k) {
      r.h[k] = fy * y.h[k] + fx * x.h[k] + fyy * y.g[i] * y.g[j] +
               fxx * x.g[i] * x.g[j] +
               fxy * (x.g[i] * y.g[j] + y.g[i] * x.g[j]);
    }
  }
  return r;
}

// double fallbacks so templated code can call these unqualified
using std::atan2;
using std::cos;
using std::exp;
using std::sin;
using std::sqrt;

}  // namespace cosshell
