#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cosshell/assembly.hpp"
#include "cosshell/presets.hpp"
#include "cosshell/solver.hpp"
#include "test_helpers.hpp"

using namespace cosshell;
using cosshell::testing::random_rotation;
using cosshell::testing::random_vector;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

MaterialParams paper_material(double h) {
  MaterialParams m;
  m.lambda = 4.4364e4;
  m.mu = 2.7191e4;
  m.mu_c = 0.1 * m.mu;
  m.L_c = 5e-4;
  m.b1 = m.b2 = 1.0;
  m.b3 = 1.0 / 3.0;
  m.thickness = h;
  return m;
}

struct Setup {
  Preset preset;
  Discretization disc;
  Problem problem;
};

Setup make_setup(const std::string& name, std::vector<int> res, int g, int p1, int p2,
                 InterpKind kind, EnergyVariant variant, const LoadSpec& loads = {},
                 double h = 0.05) {
  Setup s;
  s.preset = generate_preset(name, res, g);
  s.disc = make_discretization(s.preset.mesh,
                               std::make_shared<FeGeometryProvider>(s.preset.mesh), p1, p2, kind);
  s.problem = make_problem(s.disc, paper_material(h), variant, loads, {});
  s.problem.disc = &s.disc;
  return s;
}

Configuration perturbed_configuration(const Discretization& d, std::mt19937& rng,
                                      double def_eps, double rot_eps) {
  Configuration c = reference_configuration(d);
  for (auto& m : c.deformation) m += def_eps * random_vector(rng);
  for (auto& q : c.rotations) q = q * exp_map(rot_eps * random_vector(rng));
  return c;
}

VectorXd random_tangent(const Problem& pb, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd v(pb.disc->num_dofs());
  for (int i = 0; i < v.size(); ++i) v[i] = u(rng);
  v /= v.norm();
  apply_mask(pb.mask, v);
  return v;
}

// Richardson-extrapolated central difference of the energy along v
double fd_directional(const Problem& pb, const Configuration& x, const VectorXd& v, double t) {
  auto d = [&](double tt) {
    return (total_energy(pb, retract(x, v, tt)) - total_energy(pb, retract(x, v, -tt))) /
           (2.0 * tt);
  };
  return (4.0 * d(t / 2) - d(t)) / 3.0;
}

}  // namespace

TEST_CASE("reference configuration is energy free") {
  std::mt19937 rng(311);
  for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
    for (EnergyVariant variant : {EnergyVariant::main, EnergyVariant::birsan}) {
      Setup s = make_setup("half_sphere", {0}, 2, 2, 1, kind, variant);
      const Configuration ref = reference_configuration(s.disc);
      const double area = 2 * M_PI;  // half sphere of radius 1
      const double scale = s.problem.material.mu * s.problem.material.thickness * area;
      CHECK(std::abs(total_energy(s.problem, ref)) <= 1e-12 * scale);
      CHECK(gradient(s.problem, ref).norm() <=
            1e-10 * s.problem.material.mu * s.problem.material.thickness);

      // rigid motions stay energy free
      const Rotation r = random_rotation(rng);
      Configuration moved = ref;
      const Vector3d shift = random_vector(rng);
      for (auto& m : moved.deformation) m = r.matrix() * m + shift;
      for (auto& q : moved.rotations) q = r * q;
      CHECK(std::abs(total_energy(s.problem, moved)) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("discrete frame indifference") {
  std::mt19937 rng(313);
  Setup s = make_setup("moebius", {3, 12}, 2, 2, 1, InterpKind::geodesic, EnergyVariant::main);
  const Configuration base = perturbed_configuration(s.disc, rng, 0.05, 0.2);
  const double e0 = total_energy(s.problem, base);
  REQUIRE(std::abs(e0) > 0.0);
  for (int k = 0; k < 20; ++k) {
    const Rotation r = random_rotation(rng);
    Configuration rotated = base;
    for (auto& m : rotated.deformation) m = r.matrix() * m;
    for (auto& q : rotated.rotations) q = r * q;
    CHECK(std::abs(total_energy(s.problem, rotated) - e0) <= 1e-12 * std::abs(e0));
  }
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937 rng(317);
  struct Case {
    const char* preset;
    std::vector<int> res;
    int g, p1, p2;
    InterpKind kind;
    EnergyVariant variant;
  };
  const Case cases[] = {
      {"half_sphere", {0}, 2, 2, 1, InterpKind::geodesic, EnergyVariant::main},
      {"half_sphere", {0}, 2, 2, 1, InterpKind::projection, EnergyVariant::birsan},
      {"moebius", {2, 8}, 2, 2, 2, InterpKind::geodesic, EnergyVariant::main},
      {"flat_plate", {2, 2}, 1, 1, 1, InterpKind::projection, EnergyVariant::main},
      {"cylinder", {4, 3}, 1, 1, 2, InterpKind::geodesic, EnergyVariant::birsan},
  };
  for (const Case& c : cases) {
    LoadSpec loads;
    loads.volume.push_back({{}, Vector3d(0.1, -0.2, 0.4)});
    Setup s = make_setup(c.preset, c.res, c.g, c.p1, c.p2, c.kind, c.variant, loads);
    const Configuration x = perturbed_configuration(s.disc, rng, 0.03, 0.15);
    const VectorXd g = gradient(s.problem, x);
    REQUIRE(g.norm() > 0.0);
    for (int k = 0; k < 5; ++k) {
      const VectorXd v = random_tangent(s.problem, rng);
      const double exact = g.dot(v);
      const double fd = fd_directional(s.problem, x, v, 1e-3);
      CHECK(std::abs(fd - exact) <= 1e-6 * std::max(std::abs(exact), 1e-8 * g.norm()));
    }
  }
}

TEST_CASE("gradient at reference equals minus the load vector") {
  Setup s = make_setup("half_sphere", {0}, 2, 2, 1, InterpKind::geodesic, EnergyVariant::main);
  LoadSpec loads;
  loads.volume.push_back({{}, Vector3d(0, 0, 1e4 * 0.05)});
  s.problem.loads = assemble_loads(s.disc, loads);
  const Configuration ref = reference_configuration(s.disc);
  const VectorXd g = gradient(s.problem, ref);
  const int n1 = 3 * s.disc.layout1.count;
  CHECK((g.head(n1) + s.problem.loads.force).norm() <= 1e-10 * s.problem.loads.force.norm());
  CHECK(g.tail(g.size() - n1).norm() <= 1e-10 * s.problem.loads.force.norm());
}

TEST_CASE("hessian of a single flat triangle matches dense finite differences") {
  ParamMesh mesh;
  mesh.geometry_order = 1;
  mesh.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.triangles.push_back({0, 1, 2, -1, -1, -1});
  Discretization disc = make_discretization(
      mesh, std::make_shared<FeGeometryProvider>(mesh), 1, 1, InterpKind::geodesic);
  Problem pb = make_problem(disc, paper_material(0.05), EnergyVariant::main, {}, {});
  pb.disc = &disc;

  std::mt19937 rng(331);
  const Configuration x = perturbed_configuration(disc, rng, 0.05, 0.2);

  CsrMatrix h;
  VectorXd g;
  hessian(pb, x, h, &g);
  const int n = disc.num_dofs();
  REQUIRE(n == 18);

  Eigen::MatrixXd dense(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dense(i, j) = h.val[h.find(i, j)];
  CHECK((dense - dense.transpose()).norm() <= 1e-12 * dense.norm());

  const double t = 1e-4;
  double hmax = dense.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      VectorXd ei = VectorXd::Zero(n), ej = VectorXd::Zero(n);
      ei[i] = 1.0;
      ej[j] = 1.0;
      auto f = [&](double a, double b) {
        return total_energy(pb, retract(x, a * ei + b * ej, t));
      };
      const double fd = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * t * t);
      CHECK(std::abs(fd - dense(i, j)) <= 1e-6 * std::max(1.0, hmax));
    }
  }
}

TEST_CASE("hessian quadratic form matches second differences of the energy") {
  std::mt19937 rng(337);
  for (InterpKind kind : {InterpKind::geodesic, InterpKind::projection}) {
    for (EnergyVariant variant : {EnergyVariant::main, EnergyVariant::birsan}) {
      Setup s = make_setup("half_sphere", {0}, 2, 2, 1, kind, variant);
      const Configuration x = perturbed_configuration(s.disc, rng, 0.03, 0.15);
      CsrMatrix h;
      VectorXd g;
      double f0;
      hessian(s.problem, x, h, &g, &f0);
      CHECK(std::abs(f0 - total_energy(s.problem, x)) <= 1e-12 * std::abs(f0));

      for (int k = 0; k < 5; ++k) {
        const VectorXd v = random_tangent(s.problem, rng);
        VectorXd hv;
        h.multiply(v, hv);
        const double exact = v.dot(hv);
        auto second = [&](double t) {
          return (total_energy(s.problem, retract(x, v, t)) - 2.0 * f0 +
                  total_energy(s.problem, retract(x, v, -t))) /
                 (t * t);
        };
        const double fd = (4.0 * second(5e-3) - second(1e-2)) / 3.0;
        CHECK(std::abs(fd - exact) <= 1e-5 * std::max(std::abs(exact), 1e-6 * hv.norm()));
      }
    }
  }
}

TEST_CASE("hessian sparsity follows the element connectivity") {
  Setup s = make_setup("half_sphere", {0}, 2, 2, 1, InterpKind::geodesic, EnergyVariant::main);
  const Discretization& d = s.disc;
  CsrMatrix pattern = hessian_pattern(d);

  // node pairs sharing a triangle
  std::set<std::pair<int, int>> allowed;
  int map[36], count;
  for (int t = 0; t < d.mesh->num_triangles(); ++t) {
    assembly::element_dof_map(d, t, map, count);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < count; ++j) allowed.insert({map[i], map[j]});
  }
  int listed = 0;
  for (int i = 0; i < pattern.n; ++i)
    for (int k = pattern.row_ptr[i]; k < pattern.row_ptr[i + 1]; ++k) {
      CHECK(allowed.count({i, pattern.col[k]}) == 1);
      ++listed;
    }
  CHECK(listed == static_cast<int>(allowed.size()));
}

TEST_CASE("dirichlet handling") {
  Setup s = make_setup("flat_plate", {3, 3}, 1, 1, 1, InterpKind::geodesic, EnergyVariant::main);
  const Discretization& d = s.disc;
  std::mt19937 rng(347);

  SECTION("full clamp masks the whole gradient") {
    BoundaryConditions bc;
    for (int n = 0; n < d.layout1.count; ++n) bc.deformation.push_back({n, d.nodes1[n], {true, true, true}});
    for (int n = 0; n < d.layout2.count; ++n) bc.rotation.push_back({n, Rotation::identity()});
    s.problem.bc = bc;
    s.problem.mask = make_mask(d, bc);
    const Configuration x = perturbed_configuration(d, rng, 0.05, 0.2);
    CHECK(gradient(s.problem, x).norm() == 0.0);
  }

  SECTION("per-component masks leave the free component") {
    BoundaryConditions bc;
    bc.deformation.push_back({0, Vector3d(9, 9, 9), {true, true, false}});
    bc.rotation.push_back({1, exp_map(Vector3d(0.1, 0, 0))});
    const DofMask mask = make_mask(d, bc);
    CHECK_FALSE(mask.free[0]);
    CHECK_FALSE(mask.free[1]);
    CHECK(mask.free[2]);
    CHECK_FALSE(mask.free[d.rotation_offset() + 3]);

    Configuration x = reference_configuration(d);
    apply_dirichlet(bc, x);
    CHECK(x.deformation[0][0] == 9);
    CHECK(x.deformation[0][1] == 9);
    CHECK(x.deformation[0][2] == d.nodes1[0][2]);
    CHECK((x.rotations[1].matrix() - exp_map(Vector3d(0.1, 0, 0)).matrix()).norm() == 0.0);
  }

  SECTION("empty boundary conditions are the identity") {
    const DofMask mask = make_mask(d, {});
    for (auto f : mask.free) CHECK(f);
    Configuration x = perturbed_configuration(d, rng, 0.05, 0.2);
    const Configuration y = x;
    apply_dirichlet({}, x);
    for (size_t i = 0; i < x.deformation.size(); ++i)
      CHECK(x.deformation[i] == y.deformation[i]);
  }

  SECTION("unknown nodes are rejected") {
    BoundaryConditions bc;
    bc.deformation.push_back({d.layout1.count + 5, Vector3d::Zero(), {true, true, true}});
    CHECK_THROWS_AS(make_mask(d, bc), UnknownNode);
  }
}

TEST_CASE("external potential") {
  std::mt19937 rng(349);
  Setup s = make_setup("half_sphere", {0}, 2, 2, 1, InterpKind::geodesic, EnergyVariant::main);
  const Discretization& d = s.disc;

  SECTION("zero at the reference configuration") {
    LoadSpec loads;
    loads.volume.push_back({{}, Vector3d(0, 0, 500)});
    const LoadVector lv = assemble_loads(d, loads);
    CHECK(std::abs(external_potential(lv, reference_configuration(d))) <=
          1e-12 * std::abs(lv.offset));
  }

  SECTION("rigid translation gives f . u times the area") {
    LoadSpec loads;
    const Vector3d f(0, 0, 500);
    loads.volume.push_back({{}, f});
    const LoadVector lv = assemble_loads(d, loads);
    const Vector3d u = random_vector(rng);
    Configuration x = reference_configuration(d);
    for (auto& m : x.deformation) m += u;
    // area of the FE half sphere differs from 2 pi by the mesh approximation;
    // integrate it with the same rule the load assembly uses
    const QuadratureRule rule = symmetrized_rule(quadrature_rule(10));
    double area = 0.0;
    for (int t = 0; t < d.mesh->num_triangles(); ++t)
      for (size_t q = 0; q < rule.points.size(); ++q)
        area += rule.weights[q] * surface_geometry(*d.geometry, t, rule.points[q]).area_element;
    CHECK(external_potential(lv, x) == Catch::Approx(f.dot(u) * area).epsilon(1e-12));
  }

  SECTION("matches a midpoint-rule oracle on a refined grid") {
    LoadSpec loads;
    loads.volume.push_back({{}, Vector3d(0, 0, 1e4 * 0.05)});
    const LoadVector lv = assemble_loads(d, loads);
    const Configuration x = perturbed_configuration(d, rng, 0.05, 0.0);

    auto midpoint_rule = [&](int k) {
      double sum = 0.0;
      std::vector<double> val;
      std::vector<Vector2d> grad;
      for (int t = 0; t < d.mesh->num_triangles(); ++t) {
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k - i; ++j) {
            for (int half = 0; half < (j < k - i - 1 ? 2 : 1); ++half) {
              const double shift = half == 0 ? 1.0 / 3.0 : 2.0 / 3.0;
              const Vector2d xc((i + shift) / k, (j + shift) / k);
              const SurfaceGeometry geo = surface_geometry(*d.geometry, t, xc);
              shape_functions(d.layout1.order, xc, val, grad);
              Vector3d m = Vector3d::Zero();
              for (size_t a = 0; a < val.size(); ++a)
                m += val[a] * x.deformation[d.layout1.elem_nodes[t][a]];
              sum += 0.5 / (k * k) * geo.area_element *
                     Vector3d(0, 0, 1e4 * 0.05).dot(m - geo.position);
            }
          }
        }
      }
      return sum;
    };
    // the centroid rule is second order; extrapolate two refinement levels
    const double oracle = (4.0 * midpoint_rule(96) - midpoint_rule(48)) / 3.0;
    CHECK(external_potential(lv, x) == Catch::Approx(oracle).epsilon(1e-6));
  }

  SECTION("constant traction on a straight boundary edge") {
    Setup plate =
        make_setup("flat_plate", {2, 2}, 1, 1, 1, InterpKind::geodesic, EnergyVariant::main);
    LoadSpec loads;
    TractionLoad t;
    t.where = {{1, false, 1e-9}};  // boundary points with y <= 0
    t.value = Vector3d(3, -1, 2);
    loads.traction.push_back(t);
    const LoadVector lv = assemble_loads(plate.disc, loads);
    const Vector3d u = random_vector(rng);
    Configuration x = reference_configuration(plate.disc);
    for (auto& m : x.deformation) m += u;
    // edge y = 0 has length 1
    CHECK(external_potential(lv, x) == Catch::Approx(t.value.dot(u)).epsilon(1e-12));
  }
}

TEST_CASE("quadrature sufficiency at the default order") {
  // grid-resolved smooth fields at the experiment-scale resolutions
  struct Case {
    const char* name;
    std::vector<int> res;
  };
  for (const Case& c : {Case{"half_sphere", {2}}, Case{"cylinder", {24, 48}},
                        Case{"moebius", {8, 40}}, Case{"flat_plate", {4, 4}},
                        Case{"klein_bottle", {48, 64}}}) {
    const Preset p = generate_preset(c.name, c.res, 2);
    auto provider = std::make_shared<FeGeometryProvider>(p.mesh);

    // smooth configuration with wavelength of the order of the domain size
    const Discretization d0 = make_discretization(p.mesh, provider, 2, 1, InterpKind::geodesic);
    Vector3d lo = d0.nodes1[0], hi = d0.nodes1[0];
    for (const auto& q : d0.nodes1) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const double k = 2.0 / (hi - lo).norm();
    Configuration x = reference_configuration(d0);
    for (size_t n = 0; n < x.deformation.size(); ++n) {
      const Vector3d pos = k * d0.nodes1[n];
      x.deformation[n] +=
          0.02 / k * Vector3d(std::sin(pos[1]), std::cos(pos[2]), std::sin(pos[0]));
    }
    for (int n = 0; n < d0.layout2.count; ++n) {
      const Vector3d pos = k * d0.nodes2[n];
      x.rotations[n] = exp_map(0.05 * Vector3d(std::cos(pos[0]), std::sin(pos[2]), 1.0));
    }

    double energies[2];
    for (int pass = 0; pass < 2; ++pass) {
      const int order = default_quadrature_order(2, 1, 2) + 2 * pass;
      const Discretization d = make_discretization(p.mesh, provider, 2, 1,
                                                   InterpKind::geodesic, order);
      Problem pb = make_problem(d, paper_material(0.01), EnergyVariant::main, {}, {});
      pb.disc = &d;
      energies[pass] = total_energy(pb, x);
    }
    CHECK(std::abs(energies[0] - energies[1]) <= 1e-8 * std::abs(energies[1]));
  }
}
