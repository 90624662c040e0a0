#pragma once

// JSON run configuration and the batch driver: build mesh, material, BCs
// and loads, execute the load program, export VTK files and a
// machine-readable report. All numbers are unit-suffix-free and interpreted
// in the L/M/T convention of the material block.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "errors.hpp"
#include "presets.hpp"
#include "solver.hpp"
#include "vtk.hpp"

namespace cosshell {

using json = nlohmann::json;

struct MeshSource {
  std::string preset;            // one of the preset names, or empty
  std::vector<int> resolution;
  int geometry_order = 2;
  std::string file;              // mesh file path, or empty
};

struct BcField {
  bool active = false;
  bool twist = false;                              // otherwise clamp to the reference
  std::array<bool, 3> components = {true, true, true};  // deformation only
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double angle = 0.0;
};

struct BcSpec {
  Selector where;
  BcField deformation;
  BcField rotation;
};

struct ProbeSpec {
  std::string kind;  // point_deflection | ring_height
  std::string name;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  int component = 2;
  Selector where;
};

struct RunConfig {
  MeshSource mesh;
  std::string geometry = "fe";  // fe | analytic
  int p1 = 2, p2 = 1;
  InterpKind kind = InterpKind::geodesic;
  EnergyVariant variant = EnergyVariant::main;
  MaterialParams material;
  std::vector<BcSpec> dirichlet;
  LoadSpec load;
  std::string program_parameter = "load_scale";  // load_scale | twist_angle
  std::vector<double> program_values = {1.0};
  TrustRegionSettings solver;
  int quadrature_order = -1;  // -1: default 2 max(p1, p2, g) + 1
  std::vector<ProbeSpec> probes;
  std::string output_directory = "out";
  bool write_vtk = true;
  int threads = 0;
};

// ---- parsing ----

namespace config_detail {

inline ConfigError missing(const std::string& key) {
  return ConfigError("missing or invalid config entry '" + key + "'");
}

template <class T>
T get(const json& j, const std::string& key) {
  if (!j.contains(key)) throw missing(key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw missing(key);
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw missing(key);
  }
}

inline Eigen::Vector3d get_vec3(const json& j, const std::string& key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != 3) throw missing(key);
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

inline Selector parse_selector(const json& j) {
  Selector s;
  for (const auto& e : j) {
    HalfSpace h;
    if (e.contains("coord") && e.at("coord").is_string()) {
      const std::string c = e.at("coord").get<std::string>();
      if (c == "x") h.coord = 0;
      else if (c == "y") h.coord = 1;
      else if (c == "z") h.coord = 2;
      else throw ConfigError("selector coord must be x, y or z");
    } else {
      h.coord = get<int>(e, "coord");
      if (h.coord < 0 || h.coord > 2) throw ConfigError("selector coord must be 0, 1 or 2");
    }
    const std::string op = get<std::string>(e, "op");
    if (op == ">=") h.greater = true;
    else if (op == "<=") h.greater = false;
    else throw ConfigError("selector op must be '>=' or '<='");
    h.value = get<double>(e, "value");
    s.push_back(h);
  }
  return s;
}

inline json selector_to_json(const Selector& s) {
  json out = json::array();
  for (const auto& h : s)
    out.push_back({{"coord", h.coord}, {"op", h.greater ? ">=" : "<="}, {"value", h.value}});
  return out;
}

inline BcField parse_bc_field(const json& j, bool is_deformation) {
  BcField f;
  f.active = true;
  const std::string type = get_or<std::string>(j, "type", "fixed");
  if (type == "twist") {
    f.twist = true;
    f.axis = j.contains("axis") ? get_vec3(j, "axis") : Eigen::Vector3d::UnitZ();
    if (f.axis.norm() == 0.0) throw ConfigError("twist axis must be nonzero");
    f.axis.normalize();
    if (j.contains("center")) f.center = get_vec3(j, "center");
    f.angle = get_or<double>(j, "angle", 0.0);
  } else if (type != "fixed") {
    throw ConfigError("dirichlet type must be 'fixed' or 'twist'");
  }
  if (is_deformation && j.contains("components")) {
    const auto c = get<std::vector<bool>>(j, "components");
    if (c.size() != 3) throw ConfigError("'components' needs three booleans");
    for (int i = 0; i < 3; ++i) f.components[i] = c[i];
  }
  return f;
}

inline json bc_field_to_json(const BcField& f, bool is_deformation) {
  json out;
  out["type"] = f.twist ? "twist" : "fixed";
  if (f.twist) {
    out["axis"] = {f.axis[0], f.axis[1], f.axis[2]};
    out["center"] = {f.center[0], f.center[1], f.center[2]};
    out["angle"] = f.angle;
  }
  if (is_deformation)
    out["components"] = {f.components[0], f.components[1], f.components[2]};
  return out;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const json& j) {
  using namespace config_detail;
  RunConfig c;

  const json& jm = j.contains("mesh") ? j.at("mesh") : throw missing("mesh");
  if (jm.contains("file")) {
    c.mesh.file = get<std::string>(jm, "file");
  } else {
    c.mesh.preset = get<std::string>(jm, "preset");
    c.mesh.resolution = get<std::vector<int>>(jm, "resolution");
    c.mesh.geometry_order = get_or<int>(jm, "geometry_order", 2);
  }
  c.geometry = get_or<std::string>(j, "geometry", "fe");
  if (c.geometry != "fe" && c.geometry != "analytic")
    throw ConfigError("geometry must be 'fe' or 'analytic'");

  const json& jo = j.contains("orders") ? j.at("orders") : throw missing("orders");
  c.p1 = get<int>(jo, "deformation");
  c.p2 = get<int>(jo, "rotation");

  const std::string kind = get_or<std::string>(j, "interpolation", "geodesic");
  if (kind == "geodesic") c.kind = InterpKind::geodesic;
  else if (kind == "projection") c.kind = InterpKind::projection;
  else throw ConfigError("interpolation must be 'geodesic' or 'projection'");

  const std::string variant = get_or<std::string>(j, "variant", "main");
  if (variant == "main") c.variant = EnergyVariant::main;
  else if (variant == "birsan") c.variant = EnergyVariant::birsan;
  else throw ConfigError("variant must be 'main' or 'birsan'");

  const json& mat = j.contains("material") ? j.at("material") : throw missing("material");
  c.material.lambda = get<double>(mat, "lambda");
  c.material.mu = get<double>(mat, "mu");
  c.material.mu_c = get<double>(mat, "mu_c");
  c.material.L_c = get<double>(mat, "L_c");
  c.material.b1 = get_or<double>(mat, "b1", 1.0);
  c.material.b2 = get_or<double>(mat, "b2", 1.0);
  c.material.b3 = get_or<double>(mat, "b3", 1.0 / 3.0);
  c.material.thickness = get<double>(mat, "thickness");

  for (const auto& e : j.value("dirichlet", json::array())) {
    BcSpec spec;
    spec.where = parse_selector(e.contains("where") ? e.at("where") : throw missing("where"));
    if (e.contains("deformation")) spec.deformation = parse_bc_field(e.at("deformation"), true);
    if (e.contains("rotation")) spec.rotation = parse_bc_field(e.at("rotation"), false);
    c.dirichlet.push_back(spec);
  }

  if (j.contains("load")) {
    for (const auto& e : j.at("load").value("volume", json::array())) {
      VolumeLoad load;
      if (e.contains("where")) load.where = parse_selector(e.at("where"));
      load.value = get_vec3(e, "value");
      c.load.volume.push_back(load);
    }
    for (const auto& e : j.at("load").value("traction", json::array())) {
      TractionLoad load;
      if (e.contains("where")) load.where = parse_selector(e.at("where"));
      load.value = get_vec3(e, "value");
      c.load.traction.push_back(load);
    }
  }

  if (j.contains("program")) {
    c.program_parameter = get<std::string>(j.at("program"), "parameter");
    if (c.program_parameter != "load_scale" && c.program_parameter != "twist_angle")
      throw ConfigError("program parameter must be 'load_scale' or 'twist_angle'");
    c.program_values = get<std::vector<double>>(j.at("program"), "values");
    if (c.program_values.empty()) throw ConfigError("program values must be nonempty");
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    TrustRegionSettings& t = c.solver;
    t.initial_radius = get_or(s, "initial_radius", t.initial_radius);
    t.max_radius = get_or(s, "max_radius", t.max_radius);
    t.eta1 = get_or(s, "eta1", t.eta1);
    t.eta2 = get_or(s, "eta2", t.eta2);
    t.shrink = get_or(s, "shrink", t.shrink);
    t.grow = get_or(s, "grow", t.grow);
    t.grad_tol = get_or(s, "grad_tol", t.grad_tol);
    t.max_iterations = get_or(s, "max_iterations", t.max_iterations);
    t.cg_tol_rel = get_or(s, "cg_tol_rel", t.cg_tol_rel);
    t.cg_max_iterations = get_or(s, "cg_max_iterations", t.cg_max_iterations);
    t.def_scale = get_or(s, "def_scale", t.def_scale);
    t.rot_scale = get_or(s, "rot_scale", t.rot_scale);
  }
  c.quadrature_order = get_or(j, "quadrature_order", -1);

  for (const auto& e : j.value("probes", json::array())) {
    ProbeSpec p;
    p.kind = get<std::string>(e, "kind");
    p.name = get<std::string>(e, "name");
    if (p.kind == "point_deflection") {
      p.point = get_vec3(e, "point");
      p.component = get_or<int>(e, "component", 2);
    } else if (p.kind == "ring_height") {
      p.where = parse_selector(e.contains("where") ? e.at("where") : throw missing("where"));
    } else {
      throw ConfigError("probe kind must be 'point_deflection' or 'ring_height'");
    }
    c.probes.push_back(p);
  }

  if (j.contains("output")) {
    c.output_directory = get_or<std::string>(j.at("output"), "directory", c.output_directory);
    c.write_vtk = get_or(j.at("output"), "vtk", c.write_vtk);
  }
  c.threads = get_or(j, "threads", 0);
  return c;
}

inline json echo_config(const RunConfig& c) {
  using namespace config_detail;
  json j;
  if (!c.mesh.file.empty()) {
    j["mesh"] = {{"file", c.mesh.file}};
  } else {
    j["mesh"] = {{"preset", c.mesh.preset},
                 {"resolution", c.mesh.resolution},
                 {"geometry_order", c.mesh.geometry_order}};
  }
  j["geometry"] = c.geometry;
  j["orders"] = {{"deformation", c.p1}, {"rotation", c.p2}};
  j["interpolation"] = c.kind == InterpKind::geodesic ? "geodesic" : "projection";
  j["variant"] = c.variant == EnergyVariant::main ? "main" : "birsan";
  j["material"] = {{"lambda", c.material.lambda}, {"mu", c.material.mu},
                   {"mu_c", c.material.mu_c},     {"L_c", c.material.L_c},
                   {"b1", c.material.b1},         {"b2", c.material.b2},
                   {"b3", c.material.b3},         {"thickness", c.material.thickness}};
  j["dirichlet"] = json::array();
  for (const auto& spec : c.dirichlet) {
    json e;
    e["where"] = selector_to_json(spec.where);
    if (spec.deformation.active) e["deformation"] = bc_field_to_json(spec.deformation, true);
    if (spec.rotation.active) e["rotation"] = bc_field_to_json(spec.rotation, false);
    j["dirichlet"].push_back(e);
  }
  json volume = json::array(), traction = json::array();
  for (const auto& l : c.load.volume)
    volume.push_back({{"where", selector_to_json(l.where)},
                      {"value", {l.value[0], l.value[1], l.value[2]}}});
  for (const auto& l : c.load.traction)
    traction.push_back({{"where", selector_to_json(l.where)},
                        {"value", {l.value[0], l.value[1], l.value[2]}}});
  j["load"] = {{"volume", volume}, {"traction", traction}};
  j["program"] = {{"parameter", c.program_parameter}, {"values", c.program_values}};
  j["solver"] = {{"initial_radius", c.solver.initial_radius},
                 {"max_radius", c.solver.max_radius},
                 {"eta1", c.solver.eta1},
                 {"eta2", c.solver.eta2},
                 {"shrink", c.solver.shrink},
                 {"grow", c.solver.grow},
                 {"grad_tol", c.solver.grad_tol},
                 {"max_iterations", c.solver.max_iterations},
                 {"cg_tol_rel", c.solver.cg_tol_rel},
                 {"cg_max_iterations", c.solver.cg_max_iterations},
                 {"def_scale", c.solver.def_scale},
                 {"rot_scale", c.solver.rot_scale}};
  j["quadrature_order"] = c.quadrature_order;
  j["probes"] = json::array();
  for (const auto& p : c.probes) {
    json e = {{"kind", p.kind}, {"name", p.name}};
    if (p.kind == "point_deflection") {
      e["point"] = {p.point[0], p.point[1], p.point[2]};
      e["component"] = p.component;
    } else {
      e["where"] = selector_to_json(p.where);
    }
    j["probes"].push_back(e);
  }
  j["output"] = {{"directory", c.output_directory}, {"vtk", c.write_vtk}};
  j["threads"] = c.threads;
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  return parse_run_config(j);
}

// ---- probes ----

inline double probe_point_deflection(const Discretization& d, const Configuration& config,
                                     const Eigen::Vector3d& point, int component) {
  if (d.layout1.count == 0) throw EmptySelection("no deformation nodes");
  int best = 0;
  for (int n = 1; n < d.layout1.count; ++n)
    if ((d.nodes1[n] - point).squaredNorm() < (d.nodes1[best] - point).squaredNorm()) best = n;
  return config.deformation[best][component] - d.nodes1[best][component];
}

inline double probe_ring_height(const Discretization& d, const Configuration& config,
                                const Selector& where) {
  double sum = 0.0;
  int count = 0;
  for (int n = 0; n < d.layout1.count; ++n) {
    if (!selects(where, d.nodes1[n])) continue;
    sum += config.deformation[n][2];
    ++count;
  }
  if (count == 0) throw EmptySelection("ring_height selector matches no node");
  return sum / count;
}

// ---- driver ----

namespace config_detail {

inline Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  return exp_map(angle * axis).matrix();
}

inline BoundaryConditions build_bc(const Discretization& d, const std::vector<BcSpec>& specs,
                                   const std::string& program_parameter, double parameter) {
  BoundaryConditions bc;
  for (const auto& spec : specs) {
    const double def_angle =
        program_parameter == "twist_angle" ? parameter : spec.deformation.angle;
    const double rot_angle =
        program_parameter == "twist_angle" ? parameter : spec.rotation.angle;
    if (spec.deformation.active) {
      const Eigen::Matrix3d r = axis_angle(spec.deformation.axis, def_angle);
      for (int n = 0; n < d.layout1.count; ++n) {
        if (!selects(spec.where, d.nodes1[n])) continue;
        BcDeformation b;
        b.node = n;
        b.components = spec.deformation.components;
        b.value = spec.deformation.twist
                      ? Eigen::Vector3d(spec.deformation.center +
                                        r * (d.nodes1[n] - spec.deformation.center))
                      : d.nodes1[n];
        bc.deformation.push_back(b);
      }
    }
    if (spec.rotation.active) {
      const Rotation target =
          spec.rotation.twist
              ? Rotation::from_matrix_unchecked(axis_angle(spec.rotation.axis, rot_angle))
              : Rotation::identity();
      for (int n = 0; n < d.layout2.count; ++n) {
        if (!selects(spec.where, d.nodes2[n])) continue;
        bc.rotation.push_back({n, target});
      }
    }
  }
  return bc;
}

}  // namespace config_detail

struct StepResult {
  double parameter = 0;
  SolveReport report;
  std::map<std::string, double> probes;
  std::string vtk_file;
};

struct RunResult {
  bool ok = true;
  std::string error;
  int failed_step = -1;
  std::vector<StepResult> steps;
  json report;
};

inline RunResult run(const RunConfig& config, const std::string& out_override = "") {
  if (config.threads > 0) thread_count() = config.threads;

  ParamMesh mesh;
  std::shared_ptr<const GeometryProvider> provider;
  if (!config.mesh.file.empty()) {
    mesh = load_mesh(config.mesh.file);
    if (config.geometry == "analytic")
      throw ConfigError("analytic geometry is only available for presets");
    provider = std::make_shared<FeGeometryProvider>(mesh);
  } else {
    Preset preset =
        generate_preset(config.mesh.preset, config.mesh.resolution, config.mesh.geometry_order);
    mesh = std::move(preset.mesh);
    provider = config.geometry == "analytic"
                   ? preset.analytic
                   : std::shared_ptr<const GeometryProvider>(
                         std::make_shared<FeGeometryProvider>(mesh));
  }

  const Discretization disc = make_discretization(mesh, provider, config.p1, config.p2,
                                                  config.kind, config.quadrature_order);

  std::vector<Problem> steps;
  steps.reserve(config.program_values.size());
  for (double value : config.program_values) {
    const double scale = config.program_parameter == "load_scale" ? value : 1.0;
    const BoundaryConditions bc =
        config_detail::build_bc(disc, config.dirichlet, config.program_parameter, value);
    steps.push_back(make_problem(disc, config.material, config.variant, config.load, bc, scale));
    steps.back().disc = &disc;
  }

  const std::string out_dir = out_override.empty() ? config.output_directory : out_override;
  std::filesystem::create_directories(out_dir);

  const Configuration start = reference_configuration(disc);
  const ProgramResult result = run_load_program(start, steps, config.solver);

  RunResult out;
  out.ok = result.ok;
  out.error = result.error;
  out.failed_step = result.failed_step;

  json jsteps = json::array();
  for (size_t k = 0; k < result.configurations.size(); ++k) {
    StepResult step;
    step.parameter = config.program_values[k];
    step.report = result.reports[k];
    const Configuration& solution = result.configurations[k];

    for (const auto& p : config.probes) {
      step.probes[p.name] = p.kind == "point_deflection"
                                ? probe_point_deflection(disc, solution, p.point, p.component)
                                : probe_ring_height(disc, solution, p.where);
    }
    std::string vtk_name;
    if (config.write_vtk) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%03zu.vtk", k);
      vtk_name = name;
      step.vtk_file = (std::filesystem::path(out_dir) / name).string();
      export_vtk(disc, solution, step.vtk_file);
    }

    json js;
    js["parameter"] = step.parameter;
    js["converged"] = step.report.converged;
    js["iterations"] = step.report.iterations;
    js["energy"] = step.report.energy;
    js["gradient_norm"] = step.report.grad_norm;
    js["probes"] = step.probes;
    if (!vtk_name.empty()) js["vtk"] = vtk_name;  // relative to the output directory
    json history = json::array();
    for (const auto& rec : step.report.history)
      history.push_back({{"energy", rec.energy},
                         {"grad_norm", rec.grad_norm},
                         {"radius", rec.radius},
                         {"rho", rec.rho},
                         {"accepted", rec.accepted},
                         {"cg_iterations", rec.cg_iterations}});
    js["history"] = history;
    jsteps.push_back(js);
    out.steps.push_back(std::move(step));
  }

  out.report["config"] = echo_config(config);
  out.report["mesh"] = {{"nodes", mesh.num_nodes()},
                        {"triangles", mesh.num_triangles()},
                        {"geometry_order", mesh.geometry_order},
                        {"deformation_nodes", disc.layout1.count},
                        {"rotation_nodes", disc.layout2.count}};
  out.report["steps"] = jsteps;
  out.report["ok"] = out.ok;
  if (!out.ok) {
    out.report["error"] = out.error;
    out.report["failed_step"] = out.failed_step;
  }

  std::ofstream rep((std::filesystem::path(out_dir) / "report.json").string());
  rep << out.report.dump(2) << "\n";
  return out;
}

}  // namespace cosshell
