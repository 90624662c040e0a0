#pragma once

// Built-in reference configurations. Nodal positions interpolate the
// closed forms; every preset also carries an analytic geometry provider.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "mesh.hpp"

namespace cosshell {

struct Preset {
  ParamMesh mesh;
  std::shared_ptr<const GeometryProvider> analytic;
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

struct PlateFormula : SurfaceFormula {
  void eval(double u, double v, std::array<Eigen::Vector3d, 6>& d) const override {
    d = {Eigen::Vector3d(u, v, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
         Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  }
};

struct CylinderFormula : SurfaceFormula {
  double radius;
  explicit CylinderFormula(double r) : radius(r) {}
  void eval(double u, double v, std::array<Eigen::Vector3d, 6>& d) const override {
    const double c = std::cos(u), s = std::sin(u);
    d[0] = {radius * c, radius * s, v};
    d[1] = {-radius * s, radius * c, 0};
    d[2] = {0, 0, 1};
    d[3] = {-radius * c, -radius * s, 0};
    d[4] = Eigen::Vector3d::Zero();
    d[5] = Eigen::Vector3d::Zero();
  }
};

// m(u,v) = ((r + u cos(v/2)) cos v, (r + u cos(v/2)) sin v, u sin(v/2))
struct MoebiusFormula : SurfaceFormula {
  double r;
  explicit MoebiusFormula(double radius) : r(radius) {}
  void eval(double u, double v, std::array<Eigen::Vector3d, 6>& d) const override {
    const double c2 = std::cos(0.5 * v), s2 = std::sin(0.5 * v);
    const double c = std::cos(v), s = std::sin(v);
    const double w = r + u * c2, wu = c2, wv = -0.5 * u * s2;
    const double wuv = -0.5 * s2, wvv = -0.25 * u * c2;
    d[0] = {w * c, w * s, u * s2};
    d[1] = {wu * c, wu * s, s2};
    d[2] = {wv * c - w * s, wv * s + w * c, 0.5 * u * c2};
    d[3] = Eigen::Vector3d::Zero();
    d[4] = {wuv * c - wu * s, wuv * s + wu * c, 0.5 * c2};
    d[5] = {wvv * c - 2.0 * wv * s - w * c, wvv * s + 2.0 * wv * c - w * s, -0.25 * u * s2};
  }
};

// Klein bottle immersion with a Gaussian blend that swaps the tube's offset
// sign between the two ends of the body parameter u.
struct KleinFormula : SurfaceFormula {
  double r, t;
  KleinFormula(double r_, double t_) : r(r_), t(t_) {}
  void eval(double u, double v, std::array<Eigen::Vector3d, 6>& d) const override {
    const double cu = std::cos(u), su = std::sin(u);
    const double cv = std::cos(v), sv = std::sin(v);
    const double A = 2.0 - cu, Ap = su, App = cu;

    const double e1 = std::exp(-(0.5 * u - kPi) * (0.5 * u - kPi));
    const double g1 = 2.0 * e1 - 1.0;
    const double g1p = -(0.5 * u - kPi) * (g1 + 1.0);
    const double g1pp = (g1 + 1.0) * (-0.5 + (0.5 * u - kPi) * (0.5 * u - kPi));

    const double e2 = std::exp(-(u - 1.5 * kPi) * (u - 1.5 * kPi));
    const double e2p = -2.0 * (u - 1.5 * kPi) * e2;
    const double e2pp = (-2.0 + 4.0 * (u - 1.5 * kPi) * (u - 1.5 * kPi)) * e2;

    const double f = r * (std::cos(u) - 0.5 * std::sin(2.0 * u));
    const double fp = r * (-std::sin(u) - std::cos(2.0 * u));
    const double fpp = r * (-std::cos(u) + 2.0 * std::sin(2.0 * u));

    const double B = 0.5 * A * su * e2;
    const double Bp = 0.5 * (Ap * su + A * cu) * e2 + 0.5 * A * su * e2p;
    const double Bpp = 0.5 * (App * su + 2.0 * Ap * cu - A * su) * e2 +
                       (Ap * su + A * cu) * e2p + 0.5 * A * su * e2pp;

    d[0] = {f + A * cv * g1, A * sv, t + t * su + B * cv};
    d[1] = {fp + (Ap * g1 + A * g1p) * cv, Ap * sv, t * cu + Bp * cv};
    d[2] = {-A * g1 * sv, A * cv, -B * sv};
    d[3] = {fpp + (App * g1 + 2.0 * Ap * g1p + A * g1pp) * cv, App * sv, -t * su + Bpp * cv};
    d[4] = {-(Ap * g1 + A * g1p) * sv, Ap * cv, -Bp * sv};
    d[5] = {-A * g1 * cv, -A * sv, -B * cv};
  }
};

// Structured grid on [u0,u1] x [v0,v1] with optional index identifications.
// canonical maps a fine-grid index pair to its topological representative.
struct GridBuilder {
  int su, sv;  // fine steps per direction (geometry order times cells)
  double u0, u1, v0, v1;
  std::function<std::pair<int, int>(int, int)> canonical;

  double u_at(int i) const { return u0 + (u1 - u0) * i / su; }
  double v_at(int j) const { return v0 + (v1 - v0) * j / sv; }

  Preset build(const std::shared_ptr<const SurfaceFormula>& surface, int g, int nu, int nv,
               bool wrap_i, bool wrap_j) const {
    Preset out;
    out.mesh.geometry_order = g;

    std::map<std::pair<int, int>, int> id;
    auto node = [&](int i, int j) {
      const auto key = canonical(i, j);
      auto [it, inserted] = id.try_emplace(key, static_cast<int>(out.mesh.positions.size()));
      if (inserted) {
        std::array<Eigen::Vector3d, 6> d;
        surface->eval(u_at(key.first), v_at(key.second), d);
        out.mesh.positions.push_back(d[0]);
      }
      return it->second;
    };

    std::vector<ChartGeometryProvider::Chart> charts;
    const double du = (u1 - u0) / nu, dv = (v1 - v0) / nv;
    for (int cj = 0; cj < nv; ++cj) {
      for (int ci = 0; ci < nu; ++ci) {
        const int i0 = g * ci, j0 = g * cj;
        const double ua = u0 + ci * du, va = v0 + cj * dv;
        // lower-left triangle (P00, P10, P11) and upper-left (P00, P11, P01)
        std::array<int, 6> t1{}, t2{};
        t1.fill(-1);
        t2.fill(-1);
        t1[0] = node(i0, j0);
        t1[1] = node(i0 + g, j0);
        t1[2] = node(i0 + g, j0 + g);
        t2[0] = node(i0, j0);
        t2[1] = node(i0 + g, j0 + g);
        t2[2] = node(i0, j0 + g);
        if (g == 2) {
          t1[3] = node(i0 + 2, j0 + 1);
          t1[4] = node(i0 + 1, j0 + 1);
          t1[5] = node(i0 + 1, j0);
          t2[3] = node(i0 + 1, j0 + 2);
          t2[4] = node(i0, j0 + 1);
          t2[5] = node(i0 + 1, j0 + 1);
        }
        out.mesh.triangles.push_back(t1);
        out.mesh.triangles.push_back(t2);
        charts.push_back({{ua, va}, {du, 0}, {du, dv}});
        charts.push_back({{ua, va}, {du, dv}, {0, dv}});
      }
    }
    (void)wrap_i;
    (void)wrap_j;
    out.analytic = std::make_shared<ChartGeometryProvider>(surface, std::move(charts));
    return out;
  }
};

inline Preset make_flat_plate(int nx, int ny, int g) {
  if (nx < 1 || ny < 1) throw InvalidResolution("flat_plate needs nx, ny >= 1");
  GridBuilder b{g * nx, g * ny, 0, 1, 0, 1, [](int i, int j) { return std::pair{i, j}; }};
  return b.build(std::make_shared<PlateFormula>(), g, nx, ny, false, false);
}

inline Preset make_cylinder(int nphi, int nz, int g) {
  if (nphi < 3 || nz < 1) throw InvalidResolution("cylinder needs nphi >= 3, nz >= 1");
  const int su = g * nphi;
  GridBuilder b{su, g * nz, 0, 2 * kPi, 0, 15.0,
                [su](int i, int j) { return std::pair{i % su, j}; }};
  return b.build(std::make_shared<CylinderFormula>(10.0), g, nphi, nz, true, false);
}

inline Preset make_moebius(int nu, int nv, int g) {
  if (nu < 1 || nv < 3) throw InvalidResolution("moebius needs nu >= 1, nv >= 3");
  const double t = 4.5;
  const int su = g * nu, sv = g * nv;
  GridBuilder b{su, sv, -0.5 * t, 0.5 * t, 0, 2 * kPi, [su, sv](int i, int j) {
                  if (j == sv) return std::pair{su - i, 0};  // (u, 2pi) ~ (-u, 0)
                  return std::pair{i, j};
                }};
  return b.build(std::make_shared<MoebiusFormula>(3.0), g, nu, nv, false, true);
}

inline Preset make_klein(int nu, int nv, int g) {
  if (nu < 3 || nv < 3) throw InvalidResolution("klein_bottle needs nu, nv >= 3");
  const int su = g * nu, sv = g * nv;
  if (sv % 2 != 0) throw InvalidResolution("klein_bottle needs an even tube step count");
  // tube closes periodically in v; the body seam glues (0, v) ~ (2pi, pi - v)
  GridBuilder b{su, sv, 0, 2 * kPi, 0, 2 * kPi, [su, sv](int i, int j) {
                  j = ((j % sv) + sv) % sv;
                  if (i == su) {
                    i = 0;
                    j = ((sv / 2 - j) % sv + sv) % sv;
                  }
                  return std::pair{i, j};
                }};
  return b.build(std::make_shared<KleinFormula>(1.5, 5.0), g, nu, nv, true, true);
}

inline Preset make_half_sphere(int level, int g) {
  if (level < 0 || level > 6) throw InvalidResolution("half_sphere level must be in [0, 6]");
  // base grid: 8-triangle fan at the pole plus a 16-triangle equatorial ring
  std::vector<Eigen::Vector3d> pts;
  std::vector<std::array<int, 3>> tris;
  pts.emplace_back(0, 0, 1);
  for (int ring = 1; ring <= 2; ++ring) {
    const double theta = ring * kPi / 4.0;
    for (int j = 0; j < 8; ++j) {
      const double phi = 2.0 * kPi * j / 8.0;
      pts.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                       std::cos(theta));
    }
  }
  auto r1 = [](int j) { return 1 + (j % 8); };
  auto r2 = [](int j) { return 9 + (j % 8); };
  for (int j = 0; j < 8; ++j) {
    tris.push_back({0, r1(j), r1(j + 1)});
    tris.push_back({r1(j), r2(j), r2(j + 1)});
    tris.push_back({r1(j), r2(j + 1), r1(j + 1)});
  }

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = mid.try_emplace(key, static_cast<int>(pts.size()));
      if (inserted) pts.push_back((pts[a] + pts[b]).normalized());
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& t : tris) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  Preset out;
  out.mesh.geometry_order = g;
  out.mesh.positions = pts;
  std::map<std::pair<int, int>, int> mid;
  std::vector<std::array<Eigen::Vector3d, 3>> corners;
  for (const auto& t : tris) {
    std::array<int, 6> tri{};
    tri.fill(-1);
    for (int k = 0; k < 3; ++k) tri[k] = t[k];
    if (g == 2) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
        const auto key = std::minmax(a, b);
        auto [it, inserted] = mid.try_emplace(key, static_cast<int>(out.mesh.positions.size()));
        if (inserted)
          out.mesh.positions.push_back((out.mesh.positions[a] + out.mesh.positions[b]).normalized());
        tri[3 + k] = it->second;
      }
    }
    out.mesh.triangles.push_back(tri);
    corners.push_back({pts[t[0]], pts[t[1]], pts[t[2]]});
  }
  out.analytic = std::make_shared<SphereBlendProvider>(1.0, std::move(corners));
  return out;
}

}  // namespace detail

// name in {half_sphere, cylinder, moebius, klein_bottle, flat_plate};
// resolution: half_sphere [level], others [n_u, n_v]
inline Preset generate_preset(const std::string& name, const std::vector<int>& resolution,
                              int geometry_order) {
  if (geometry_order != 1 && geometry_order != 2)
    throw InvalidResolution("geometry order must be 1 or 2");
  auto need = [&](size_t n) {
    if (resolution.size() != n)
      throw InvalidResolution("preset '" + name + "' expects " + std::to_string(n) +
                              " resolution parameter(s)");
  };
  if (name == "half_sphere") {
    need(1);
    return detail::make_half_sphere(resolution[0], geometry_order);
  }
  if (name == "cylinder") {
    need(2);
    return detail::make_cylinder(resolution[0], resolution[1], geometry_order);
  }
  if (name == "moebius") {
    need(2);
    return detail::make_moebius(resolution[0], resolution[1], geometry_order);
  }
  if (name == "klein_bottle") {
    need(2);
    return detail::make_klein(resolution[0], resolution[1], geometry_order);
  }
  if (name == "flat_plate") {
    need(2);
    return detail::make_flat_plate(resolution[0], resolution[1], geometry_order);
  }
  throw InvalidResolution("unknown preset '" + name + "'");
}

}  // namespace cosshell
