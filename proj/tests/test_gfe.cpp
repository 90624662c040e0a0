#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cosshell/gfe.hpp"
#include "cosshell/presets.hpp"
#include "test_helpers.hpp"

using namespace cosshell;
using cosshell::testing::random_rotation;
using cosshell::testing::random_unit_vector;
using cosshell::testing::random_vector;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

// coefficients in a geodesic ball of the given radius around a random center
std::vector<Rotation> random_admissible_set(std::mt19937& rng, int m, double radius = 0.6) {
  std::uniform_real_distribution<double> u(0.0, radius);
  const Rotation center = random_rotation(rng);
  std::vector<Rotation> out;
  for (int i = 0; i < m; ++i)
    out.push_back(center * exp_map(u(rng) * random_unit_vector(rng)));
  return out;
}

// weights from the shape functions of the given order at a random point
std::vector<double> random_weights(std::mt19937& rng, int order) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  std::vector<double> lam;
  std::vector<Vector2d> dlam;
  shape_functions(order, Vector2d(a, b), lam, dlam);
  return lam;
}

// independent oracle for the embedded-distance minimizer: Riemannian
// gradient descent with Armijo backtracking on f(Q) = sum_i l_i |R_i - Q|^2,
// then a finite-difference Newton polish
Rotation embedded_karcher_descent(const std::vector<Rotation>& coeffs,
                                  const std::vector<double>& lam) {
  Matrix3d msum = Matrix3d::Zero();
  for (size_t i = 0; i < coeffs.size(); ++i) msum += lam[i] * coeffs[i].matrix();
  auto f = [&](const Rotation& q) { return -2.0 * (q.matrix().transpose() * msum).trace(); };
  auto grad = [&](const Rotation& q) -> Vector3d {
    const Matrix3d a = q.matrix().transpose() * msum;
    return -2.0 * to_eigen(so3::axl_c_of_skew(from_eigen(Matrix3d(a))));
  };
  Rotation q = coeffs[0];
  for (int it = 0; it < 200; ++it) {
    const Vector3d g = grad(q);
    if (g.norm() < 1e-9) break;
    double step = 0.25;
    const double f0 = f(q);
    while (step > 1e-16 && f(q * exp_map(-step * g)) > f0 - 0.5 * step * g.squaredNorm())
      step *= 0.5;
    q = q * exp_map(-step * g);
  }
  for (int it = 0; it < 10; ++it) {  // Newton with numeric Jacobian of the gradient
    const Vector3d g = grad(q);
    if (g.norm() < 1e-14) break;
    Matrix3d jac;
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      const Vector3d v = h * Vector3d::Unit(k);
      jac.col(k) = (grad(q * exp_map(v)) - grad(q * exp_map(-v))) / (2 * h);
    }
    q = q * exp_map(Vector3d(jac.fullPivLu().solve(-g)));
  }
  return q;
}

}  // namespace

TEST_CASE("projection-based interpolation") {
  std::mt19937 rng(101);
  SECTION("constant coefficients reproduce the value for any weights") {
    const Rotation q = random_rotation(rng);
    for (int order : {1, 2}) {
      const auto lam = random_weights(rng, order);
      const std::vector<Rotation> coeffs(lam.size(), q);
      CHECK((interp_projection(coeffs, lam).matrix() - q.matrix()).norm() < 1e-13);
    }
  }
  SECTION("Kronecker delta weights reproduce the coefficient") {
    const auto coeffs = random_admissible_set(rng, 6);
    std::vector<double> lam(6, 0.0);
    lam[4] = 1.0;
    CHECK((interp_projection(coeffs, lam).matrix() - coeffs[4].matrix()).norm() < 1e-13);
  }
  SECTION("singular blends are rejected") {
    // det(I/2 + diag(1,-1,-1)/2) = 0
    const std::vector<Rotation> coeffs = {Rotation::identity(),
                                          exp_map(Vector3d(M_PI, 0, 0))};
    const std::vector<double> lam = {0.5, 0.5};
    CHECK_THROWS_AS(interp_projection(coeffs, lam), CoefficientsTooSpread);
  }
}

TEST_CASE("geodesic interpolation") {
  std::mt19937 rng(103);
  SECTION("Kronecker delta weights reproduce the coefficient") {
    const auto coeffs = random_admissible_set(rng, 6);
    std::vector<double> lam(6, 0.0);
    lam[2] = 1.0;
    CHECK((interp_geodesic(coeffs, lam).matrix() - coeffs[2].matrix()).norm() < 1e-12);
  }
  SECTION("two coefficients give the geodesic arc point") {
    const std::vector<Rotation> coeffs = {Rotation::identity(), exp_map(Vector3d(0.8, 0, 0))};
    const std::vector<double> lam = {0.5, 0.5};
    const Rotation mid = interp_geodesic(coeffs, lam);
    CHECK((mid.matrix() - exp_map(Vector3d(0.4, 0, 0)).matrix()).norm() < 1e-12);
  }
  SECTION("first-order optimality residual vanishes") {
    for (int rep = 0; rep < 50; ++rep) {
      for (int order : {1, 2}) {
        const auto lam = random_weights(rng, order);
        const auto coeffs = random_admissible_set(rng, static_cast<int>(lam.size()));
        const Rotation q = interp_geodesic(coeffs, lam);
        Vector3d r = Vector3d::Zero();
        for (size_t i = 0; i < lam.size(); ++i)
          r += lam[i] * log_map(q.transposed() * coeffs[i]);
        CHECK(r.norm() < 1e-12);
      }
    }
  }
  SECTION("coefficients spread beyond pi/2 are rejected") {
    const std::vector<Rotation> coeffs = {Rotation::identity(), exp_map(Vector3d(2.0, 0, 0)),
                                          exp_map(Vector3d(0, 2.0, 0))};
    const std::vector<double> lam = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK_THROWS_AS(interp_geodesic(coeffs, lam), CoefficientsTooSpread);
  }
}

TEST_CASE("geodesic rule with the embedding distance equals projection") {
  std::mt19937 rng(107);
  for (int rep = 0; rep < 100; ++rep) {
    const int order = rep % 2 + 1;
    const auto lam = random_weights(rng, order);
    const auto coeffs = random_admissible_set(rng, static_cast<int>(lam.size()));
    const Rotation via_descent = embedded_karcher_descent(coeffs, lam);
    const Rotation via_polar = interp_projection(coeffs, lam);
    CHECK((via_descent.matrix() - via_polar.matrix()).norm() < 1e-10);
  }
}

TEST_CASE("equivariance under left multiplication") {
  std::mt19937 rng(109);
  for (int rep = 0; rep < 25; ++rep) {
    const int order = rep % 2 + 1;
    const auto lam = random_weights(rng, order);
    const auto coeffs = random_admissible_set(rng, static_cast<int>(lam.size()));
    const Rotation s = random_rotation(rng);
    std::vector<Rotation> rotated;
    for (const auto& c : coeffs) rotated.push_back(s * c);

    CHECK((interp_geodesic(rotated, lam).matrix() -
           (s * interp_geodesic(coeffs, lam)).matrix()).norm() < 1e-12);
    CHECK((interp_projection(rotated, lam).matrix() -
           (s * interp_projection(coeffs, lam)).matrix()).norm() < 1e-12);
  }
}

namespace {

RotationField single_triangle_field(const LagrangeLayout& lay, InterpKind kind,
                                    std::vector<Rotation> values) {
  RotationField f;
  f.layout = &lay;
  f.kind = kind;
  f.values = std::move(values);
  return f;
}

ParamMesh one_triangle_mesh() {
  ParamMesh mesh;
  mesh.geometry_order = 1;
  mesh.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.triangles.push_back({0, 1, 2, -1, -1, -1});
  return mesh;
}

}  // namespace

TEST_CASE("interpolation jacobian") {
  std::mt19937 rng(113);
  const ParamMesh mesh = one_triangle_mesh();

  SECTION("constant fields have zero derivatives") {
    for (int order : {1, 2}) {
      const LagrangeLayout lay = lagrange_points(mesh, order);
      const Rotation q = random_rotation(rng);
      for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
        const auto field =
            single_triangle_field(lay, kind, std::vector<Rotation>(lay.count, q));
        const auto jac = interp_jacobian(field, 0, Vector2d(0.31, 0.4));
        CHECK((jac.value.matrix() - q.matrix()).norm() < 1e-12);
        CHECK(jac.d1.matrix().norm() < 1e-11);
        CHECK(jac.d2.matrix().norm() < 1e-11);
      }
    }
  }

  SECTION("fields varying only along x1 have d/dx2 = 0") {
    const LagrangeLayout lay = lagrange_points(mesh, 1);
    const Rotation a = random_rotation(rng);
    const Rotation b = a * exp_map(0.5 * random_unit_vector(rng));
    for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
      const auto field = single_triangle_field(lay, kind, {a, b, a});
      const auto jac = interp_jacobian(field, 0, Vector2d(0.25, 0.35));
      CHECK(jac.d2.matrix().norm() < 1e-11);
      CHECK(jac.d1.matrix().norm() > 1e-3);
    }
  }

  SECTION("matches central finite differences") {
    for (int order : {1, 2}) {
      const LagrangeLayout lay = lagrange_points(mesh, order);
      for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
        for (int rep = 0; rep < 5; ++rep) {
          auto values = random_admissible_set(rng, lay.count, 0.5);
          const auto field = single_triangle_field(lay, kind, values);
          const Vector2d x(0.27, 0.33);
          const auto jac = interp_jacobian(field, 0, x);
          const Matrix3d q0 = jac.value.matrix();
          for (int alpha = 0; alpha < 2; ++alpha) {
            const Vector3d u = to_eigen(so3::axl_c_of_skew(
                from_eigen(Matrix3d(q0.transpose() * jac.value.matrix())))) ;
            (void)u;
            double best = 1e100;
            const Vector3d exact = to_eigen(so3::axl_c_of_skew(from_eigen(
                Matrix3d(alpha == 0 ? jac.d1.matrix() : jac.d2.matrix()))));
            for (double h : {1e-4, 1e-5, 1e-6}) {
              Vector2d dx = Vector2d::Zero();
              dx[alpha] = h;
              const Matrix3d qp = interp_jacobian(field, 0, x + dx).value.matrix();
              const Matrix3d qm = interp_jacobian(field, 0, x - dx).value.matrix();
              const Vector3d wp = to_eigen(so3::log_vee_c(from_eigen(Matrix3d(q0.transpose() * qp))));
              const Vector3d wm = to_eigen(so3::log_vee_c(from_eigen(Matrix3d(q0.transpose() * qm))));
              const Vector3d fd = (wp - wm) / (2 * h);
              best = std::min(best, (fd - exact).norm() / std::max(1e-12, exact.norm()));
            }
            CHECK(best < 1e-6);
          }
        }
      }
    }
  }

  SECTION("body-frame derivatives are invariant under left rotation") {
    const LagrangeLayout lay = lagrange_points(mesh, 2);
    auto values = random_admissible_set(rng, lay.count, 0.5);
    const Rotation s = random_rotation(rng);
    for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
      const auto field = single_triangle_field(lay, kind, values);
      std::vector<Rotation> rotated;
      for (const auto& v : values) rotated.push_back(s * v);
      const auto rotated_field = single_triangle_field(lay, kind, rotated);
      const Vector2d x(0.42, 0.17);
      const auto j1 = interp_jacobian(field, 0, x);
      const auto j2 = interp_jacobian(rotated_field, 0, x);
      CHECK((j1.d1.matrix() - j2.d1.matrix()).norm() < 1e-11);
      CHECK((j1.d2.matrix() - j2.d2.matrix()).norm() < 1e-11);
    }
  }
}

TEST_CASE("coefficient derivative") {
  std::mt19937 rng(127);
  const ParamMesh mesh = one_triangle_mesh();

  SECTION("delta weights give the identity map") {
    const LagrangeLayout lay = lagrange_points(mesh, 2);
    auto values = random_admissible_set(rng, lay.count, 0.4);
    for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
      const auto field = single_triangle_field(lay, kind, values);
      // local node 3 is the midpoint of edge 0, reference coords (1/2, 1/2)
      const Matrix3d map = interp_coefficient_derivative(field, 0, Vector2d(0.5, 0.5), 3);
      CHECK((map - Matrix3d::Identity()).norm() < 1e-11);
    }
  }

  SECTION("zero weight gives the zero map for the projection rule") {
    const LagrangeLayout lay = lagrange_points(mesh, 1);
    auto values = random_admissible_set(rng, 3, 0.4);
    const auto field = single_triangle_field(lay, InterpKind::projection, values);
    // on the edge x2 = 0 the opposite corner's weight vanishes
    const Matrix3d map = interp_coefficient_derivative(field, 0, Vector2d(0.3, 0.0), 2);
    CHECK(map.norm() < 1e-12);
  }

  SECTION("matches finite differences") {
    for (int order : {1, 2}) {
      const LagrangeLayout lay = lagrange_points(mesh, order);
      for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
        auto values = random_admissible_set(rng, lay.count, 0.5);
        const auto field = single_triangle_field(lay, kind, values);
        const Vector2d x(0.22, 0.41);
        const int node = order == 1 ? 1 : 4;
        const Matrix3d map = interp_coefficient_derivative(field, 0, x, node);
        const Matrix3d q0 = interp_jacobian(field, 0, x).value.matrix();
        for (int k = 0; k < 3; ++k) {
          const Vector3d v = Vector3d::Unit(k);
          double best = 1e100;
          for (double h : {1e-5, 1e-6}) {
            auto perturbed = [&](double sign) {
              auto vals = values;
              vals[lay.elem_nodes[0][node]] =
                  vals[lay.elem_nodes[0][node]] * exp_map(sign * h * v);
              const auto f = single_triangle_field(lay, kind, vals);
              return interp_jacobian(f, 0, x).value.matrix();
            };
            const Vector3d wp =
                to_eigen(so3::log_vee_c(from_eigen(Matrix3d(q0.transpose() * perturbed(1.0)))));
            const Vector3d wm =
                to_eigen(so3::log_vee_c(from_eigen(Matrix3d(q0.transpose() * perturbed(-1.0)))));
            const Vector3d fd = (wp - wm) / (2 * h);
            best = std::min(best, (fd - map * v).norm() / std::max(1e-10, (map * v).norm()));
          }
          CHECK(best < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("inter-element continuity across glued edges") {
  const Preset p = generate_preset("moebius", {4, 16}, 2);
  const LagrangeLayout lay = lagrange_points(p.mesh, 2);

  // smooth single-valued field: rotation vector built from nodal position
  const FeGeometryProvider fe(p.mesh);
  RotationField field;
  field.layout = &lay;
  field.values.resize(lay.count);
  for (int n = 0; n < lay.count; ++n) {
    const auto& [tri, xref] = lay.anchor[n];
    const Vector3d pos = fe.position(tri, xref);
    field.values[n] =
        exp_map(0.25 * Vector3d(std::sin(pos[0]), std::cos(pos[1] + 0.5), std::sin(pos[2] * 0.7)));
  }

  const auto edges = build_edges(p.mesh);
  const Vector2d corner[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
    field.kind = kind;
    int checked = 0;
    for (const EdgeInfo& e : edges) {
      if (e.count != 2) continue;
      for (double t : {0.3, 0.7}) {
        Matrix3d q[2];
        for (int side = 0; side < 2; ++side) {
          const int tri = e.tri[side], k = e.local[side];
          int ia = (k + 1) % 3, ib = (k + 2) % 3;
          if (p.mesh.triangles[tri][ia] != e.a) std::swap(ia, ib);
          const Vector2d x = corner[ia] + t * (corner[ib] - corner[ia]);
          q[side] = interp_jacobian(field, tri, x).value.matrix();
        }
        CHECK((q[0] - q[1]).norm() < 1e-12);
        ++checked;
      }
    }
    CHECK(checked > 100);
  }
}
