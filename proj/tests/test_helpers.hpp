#pragma once

#include <random>

#include <Eigen/Dense>

#include "cosshell/so3.hpp"

namespace cosshell::testing {

inline Eigen::Vector3d random_unit_vector(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline Eigen::Vector3d random_vector(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Eigen::Vector3d(u(rng), u(rng), u(rng));
}

inline Rotation random_rotation(std::mt19937& rng, double max_angle = 3.0) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return exp_map(u(rng) * random_unit_vector(rng));
}

inline Eigen::Matrix3d random_matrix(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace cosshell::testing
