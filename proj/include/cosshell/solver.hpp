#pragma once

// Riemannian trust-region minimization over R^{3 N1} x SO(3)^{N2} with
// Steihaug truncated-CG subproblems. The retraction moves deformation nodes
// linearly and rotation nodes along R_i exp(hat(v_i)).

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "errors.hpp"

namespace cosshell {

struct TrustRegionSettings {
  double initial_radius = 1.0;
  double max_radius = 1e4;
  double eta1 = 0.01;  // acceptance threshold
  double eta2 = 0.9;   // radius-growth threshold
  double shrink = 0.25;
  double grow = 2.5;
  double grad_tol = 1e-8;
  int max_iterations = 500;
  double cg_tol_rel = 1e-2;
  int cg_max_iterations = 0;  // 0: dimension of the tangent space
  double def_scale = 1.0;     // trust-region norm weights per block
  double rot_scale = 1.0;

  void validate() const {
    if (!(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0))
      throw Error("trust-region thresholds need 0 < eta1 < eta2 < 1");
    if (!(shrink < 1.0 && grow > 1.0) || !(initial_radius > 0.0))
      throw Error("trust-region factors on the wrong side of 1");
    if (!(def_scale > 0.0 && rot_scale > 0.0)) throw Error("norm scales must be positive");
  }
};

struct IterationRecord {
  double energy = 0, grad_norm = 0, radius = 0, rho = 0;
  int cg_iterations = 0;
  bool accepted = false;
  bool boundary = false;
};

struct SolveReport {
  std::vector<IterationRecord> history;
  double energy = 0;
  double grad_norm = 0;
  int iterations = 0;
  bool converged = false;
};

inline Configuration retract(const Configuration& x, const Eigen::VectorXd& v, double t) {
  Configuration out = x;
  const int n1 = static_cast<int>(x.deformation.size());
  for (int i = 0; i < n1; ++i) out.deformation[i] += t * v.segment<3>(3 * i);
  for (size_t i = 0; i < x.rotations.size(); ++i) {
    const Eigen::Vector3d w = v.segment<3>(3 * n1 + 3 * static_cast<int>(i));
    if (w.squaredNorm() > 0.0) out.rotations[i] = x.rotations[i] * exp_map(t * w);
  }
  return out;
}

namespace solver_detail {

struct WeightedDot {
  const Eigen::VectorXd* w;  // squared per-dof weights
  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return (a.array() * w->array() * b.array()).sum();
  }
};

}  // namespace solver_detail

struct TcgResult {
  Eigen::VectorXd step;
  double model_decrease = 0;
  int iterations = 0;
  bool boundary = false;
};

// Steihaug truncated CG on  min g.s + s.H s / 2  s.t. |s|_W <= radius.
// apply_h must already include the BC mask.
template <class ApplyH>
inline TcgResult tcg_subproblem(const Eigen::VectorXd& g, ApplyH&& apply_h, double radius,
                                const Eigen::VectorXd& weights, double tol_rel,
                                int max_iterations) {
  const int n = static_cast<int>(g.size());
  solver_detail::WeightedDot wdot{&weights};

  TcgResult out;
  out.step = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = g;
  // preconditioner = weight matrix, so CG iterates in the trust-region norm
  Eigen::VectorXd z = r.array() / weights.array();
  Eigen::VectorXd dir = -z;
  double rz = r.dot(z);
  const double stop = tol_rel * std::sqrt(wdot(z, z));
  if (max_iterations <= 0) max_iterations = n;

  Eigen::VectorXd hd(n);
  auto model = [&](const Eigen::VectorXd& s) {
    apply_h(s, hd);
    return g.dot(s) + 0.5 * s.dot(hd);
  };

  for (int it = 0; it < max_iterations; ++it) {
    apply_h(dir, hd);
    const double curvature = dir.dot(hd);
    const double snorm2 = wdot(out.step, out.step);
    const double sd = wdot(out.step, dir);
    const double dnorm2 = wdot(dir, dir);

    auto boundary_step = [&]() {
      const double c = snorm2 - radius * radius;
      const double tau = (-sd + std::sqrt(std::max(sd * sd - dnorm2 * c, 0.0))) / dnorm2;
      out.step += tau * dir;
      out.boundary = true;
    };

    if (curvature <= 0.0) {  // negative curvature: go to the boundary
      boundary_step();
      out.iterations = it + 1;
      out.model_decrease = -model(out.step);
      return out;
    }
    const double alpha = rz / curvature;
    if (snorm2 + 2.0 * alpha * sd + alpha * alpha * dnorm2 >= radius * radius) {
      boundary_step();
      out.iterations = it + 1;
      out.model_decrease = -model(out.step);
      return out;
    }
    out.step += alpha * dir;
    r += alpha * hd;
    z = r.array() / weights.array();
    const double rz_next = r.dot(z);
    out.iterations = it + 1;
    if (std::sqrt(wdot(z, z)) <= stop) break;
    dir = -z + (rz_next / rz) * dir;
    rz = rz_next;
  }
  out.model_decrease = -model(out.step);
  return out;
}

// Squared per-dof weights of the trust-region norm.
inline Eigen::VectorXd tr_weights(const Discretization& d, const TrustRegionSettings& s) {
  Eigen::VectorXd w(d.num_dofs());
  w.head(d.rotation_offset()).setConstant(s.def_scale * s.def_scale);
  w.tail(3 * d.layout2.count).setConstant(s.rot_scale * s.rot_scale);
  return w;
}

inline SolveReport minimize(const Problem& pb, Configuration& config,
                            const TrustRegionSettings& settings) {
  settings.validate();
  const Discretization& d = *pb.disc;
  apply_dirichlet(pb.bc, config);

  const Eigen::VectorXd weights = tr_weights(d, settings);
  solver_detail::WeightedDot wdot{&weights};

  SolveReport report;
  CsrMatrix h;
  Eigen::VectorXd g;
  double f = 0;
  double radius = settings.initial_radius;
  bool have_model = false;

  auto apply_h = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    Eigen::VectorXd xm = x;
    apply_mask(pb.mask, xm);
    h.multiply(xm, y);
    apply_mask(pb.mask, y);
  };

  for (int it = 0; it < settings.max_iterations; ++it) {
    if (!have_model) {
      hessian(pb, config, h, &g, &f);
      have_model = true;
    }
    const double gnorm = std::sqrt(wdot(g, g));
    report.energy = f;
    report.grad_norm = gnorm;
    report.iterations = it;
    if (gnorm <= settings.grad_tol) {
      report.converged = true;
      return report;
    }

    TcgResult sub = tcg_subproblem(g, apply_h, radius, weights, settings.cg_tol_rel,
                                   settings.cg_max_iterations);

    IterationRecord rec;
    rec.energy = f;
    rec.grad_norm = gnorm;
    rec.radius = radius;
    rec.cg_iterations = sub.iterations;
    rec.boundary = sub.boundary;

    double rho = -std::numeric_limits<double>::infinity();
    Configuration trial;
    double f_trial = 0;
    if (sub.model_decrease > 0.0) {
      trial = retract(config, sub.step, 1.0);
      try {
        f_trial = total_energy(pb, trial);
        rho = (f - f_trial) / sub.model_decrease;
      } catch (const CoefficientsTooSpread&) {
      } catch (const NoConvergence&) {
      }
    }
    rec.rho = rho;

    if (rho > settings.eta1) {
      rec.accepted = true;
      config = std::move(trial);
      f = f_trial;
      have_model = false;
      if (rho > settings.eta2 && sub.boundary)
        radius = std::min(settings.grow * radius, settings.max_radius);
    } else {
      radius *= settings.shrink;
      if (radius < 1e-14 * settings.initial_radius)
        throw StalledAtNonstationaryPoint(
            "trust region collapsed with gradient norm " + std::to_string(gnorm));
    }
    report.history.push_back(rec);
  }
  report.iterations = settings.max_iterations;
  // report the state of the final iterate
  hessian(pb, config, h, &g, &f);
  report.energy = f;
  report.grad_norm = std::sqrt(wdot(g, g));
  report.converged = report.grad_norm <= settings.grad_tol;
  return report;
}

struct ProgramResult {
  std::vector<Configuration> configurations;  // one per completed step
  std::vector<SolveReport> reports;
  bool ok = true;
  int failed_step = -1;
  std::string error;
};

// Solves the steps in order, warm-starting each from the previous solution.
// A failing step aborts and preserves the last good configuration.
inline ProgramResult run_load_program(const Configuration& start,
                                      std::span<const Problem> steps,
                                      const TrustRegionSettings& settings) {
  ProgramResult out;
  Configuration current = start;
  for (size_t k = 0; k < steps.size(); ++k) {
    try {
      SolveReport rep = minimize(steps[k], current, settings);
      out.reports.push_back(std::move(rep));
      out.configurations.push_back(current);
    } catch (const Error& err) {
      out.ok = false;
      out.failed_step = static_cast<int>(k);
      out.error = err.what();
      break;
    }
  }
  return out;
}

}  // namespace cosshell
