#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace visco {

/// Discrete L2 norm with step weight: sqrt(dt * sum x_k^2).
inline double l2_norm(const Eigen::VectorXd& x, double dt) {
  return std::sqrt(dt * x.squaredNorm());
}

inline double l2_norm(const Eigen::MatrixXd& x, double dt) {
  return std::sqrt(dt * x.squaredNorm());
}

/// ||a - b|| / ||a|| in the dt-weighted discrete L2 norm.
inline double rel_l2_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dt) {
  return l2_norm((a - b).eval(), dt) / l2_norm(a, dt);
}

}  // namespace visco
