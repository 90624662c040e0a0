// Batch driver for the Cosserat shell simulator.
//
//   shell run <config.json> [--out DIR] [--threads N]
//   shell mesh <preset> --resolution a[,b] [--geometry-order g] --out FILE
//
// Exit codes: 0 ok, 1 solver failure, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "cosshell/mesh.hpp"
#include "cosshell/presets.hpp"
#include "cosshell/runconfig.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Geometrically nonlinear Cosserat shell simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = 0;
  CLI::App* run_cmd = app.add_subcommand("run", "run a simulation from a JSON config");
  run_cmd->add_option("config", config_path, "path to the run configuration")->required();
  run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  run_cmd->add_option("--threads", threads, "number of assembly threads");

  std::string preset_name, mesh_out;
  std::vector<int> resolution;
  int geometry_order = 2;
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "write a preset mesh file");
  mesh_cmd->add_option("preset", preset_name,
                       "half_sphere | cylinder | moebius | klein_bottle | flat_plate")
      ->required();
  mesh_cmd->add_option("--resolution", resolution, "preset resolution parameters")
      ->required()
      ->delimiter(',');
  mesh_cmd->add_option("--geometry-order", geometry_order, "1 or 2");
  mesh_cmd->add_option("--out", mesh_out, "output mesh file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cosshell::RunConfig config = cosshell::load_run_config(config_path);
      if (threads > 0) config.threads = threads;
      const cosshell::RunResult result = cosshell::run(config, out_dir);
      if (!result.ok) {
        std::fprintf(stderr, "solver failure at step %d: %s\n", result.failed_step,
                     result.error.c_str());
        return 1;
      }
      for (const auto& step : result.steps) {
        std::printf("step parameter=%.6g iterations=%d energy=%.9e |g|=%.3e%s\n",
                    step.parameter, step.report.iterations, step.report.energy,
                    step.report.grad_norm, step.report.converged ? "" : "  [not converged]");
        for (const auto& [name, value] : step.probes)
          std::printf("  probe %s = %.9g\n", name.c_str(), value);
      }
      bool all_converged = true;
      for (const auto& step : result.steps) all_converged &= step.report.converged;
      return all_converged ? 0 : 1;
    }
    if (*mesh_cmd) {
      const cosshell::Preset preset =
          cosshell::generate_preset(preset_name, resolution, geometry_order);
      cosshell::save_mesh(preset.mesh, mesh_out);
      std::printf("wrote %s: %d nodes, %d triangles (order %d)\n", mesh_out.c_str(),
                  preset.mesh.num_nodes(), preset.mesh.num_triangles(),
                  preset.mesh.geometry_order);
      return 0;
    }
  } catch (const cosshell::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cosshell::InvalidResolution& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cosshell::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cosshell::InvalidMaterial& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cosshell::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
