#pragma once

// Quadrature on the reference triangle {x, y >= 0, x + y <= 1}.
// Degrees up to 5 use the classic symmetric positive rules; the symmetry
// matters for the orientation-flip invariance tests. Higher degrees fall
// back to a collapsed Gauss-Legendre product rule (positive, not symmetric).

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace cosshell {

struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;  // sum to 1/2
  int degree = 0;
};

namespace detail {

// Gauss-Legendre nodes/weights on [0, 1] by Newton iteration on P_n.
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));  // initial guess on [-1,1]
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (t + 1.0);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

inline void push_symmetric_orbit(QuadratureRule& r, double beta, double w_area1) {
  // barycentric orbit (1-2b, b, b) and permutations; weight given for the
  // area-1 normalization, stored for the area-1/2 reference triangle
  const double a = 1.0 - 2.0 * beta;
  r.points.emplace_back(beta, beta);
  r.points.emplace_back(a, beta);
  r.points.emplace_back(beta, a);
  for (int k = 0; k < 3; ++k) r.weights.push_back(0.5 * w_area1);
}

}  // namespace detail

// Rule exact for polynomials of total degree <= order; weights positive.
inline QuadratureRule quadrature_rule(int order) {
  if (order < 0 || order > 10) throw UnsupportedOrder("quadrature order must be in [0, 10]");
  QuadratureRule r;
  if (order <= 1) {
    r.degree = 1;
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5);
  } else if (order == 2) {
    r.degree = 2;
    detail::push_symmetric_orbit(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (order <= 4) {
    r.degree = 4;
    detail::push_symmetric_orbit(r, 0.445948490915965, 0.223381589678011);
    detail::push_symmetric_orbit(r, 0.091576213509771, 0.109951743655322);
  } else if (order == 5) {
    r.degree = 5;  // 7-point Radon rule
    const double s15 = std::sqrt(15.0);
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5 * 9.0 / 40.0);
    detail::push_symmetric_orbit(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
    detail::push_symmetric_orbit(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
  } else {
    // collapsed product rule: x = u, y = v (1 - u), jacobian (1 - u)
    r.degree = order;
    const int n = (order + 3) / 2;
    std::vector<double> x, w;
    detail::gauss_legendre_01(n, x, w);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        r.points.emplace_back(x[i], x[j] * (1.0 - x[i]));
        r.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
      }
  }
  return r;
}

// Gauss rule on [0, 1] for boundary-edge integrals.
inline void edge_quadrature(int order, std::vector<double>& x, std::vector<double>& w) {
  const int n = std::max(1, (order + 2) / 2);
  detail::gauss_legendre_01(n, x, w);
}

// Averages the rule over all vertex relabelings of the reference triangle,
// making it exact under orientation flips.
inline QuadratureRule symmetrized_rule(const QuadratureRule& base) {
  QuadratureRule r;
  r.degree = base.degree;
  for (size_t q = 0; q < base.points.size(); ++q) {
    const double l[3] = {1.0 - base.points[q][0] - base.points[q][1], base.points[q][0],
                         base.points[q][1]};
    const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
    for (const auto& p : perms) {
      r.points.emplace_back(l[p[1]], l[p[2]]);
      r.weights.push_back(base.weights[q] / 6.0);
    }
  }
  return r;
}

}  // namespace cosshell
