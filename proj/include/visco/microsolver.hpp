#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "visco/constitutive.hpp"
#include "visco/material.hpp"

namespace visco {

/// Configuration shared by the fine-scale and macroscale solvers.
/// Left end is held at zero; the right end follows the Dirichlet
/// displacement signal boundary_b (zero when unset).
struct SimConfig {
  double domain_length = 1.0;
  double epsilon = 0.0;  // microstructure period (multiscale solver only)
  double h = 0.0;
  double dt = 0.0;
  double T = 0.0;
  double rho = 1.0;
  std::function<double(double, double)> forcing;  // f(x, t)
  std::function<double(double)> boundary_b;       // right-end displacement
  std::function<double(double)> u_init, v_init;
  int store_stride = 1;
};

/// Space-time displacement (and velocity) history on the solver grid.
struct SimResult {
  std::vector<double> times;
  std::vector<double> nodes;
  Eigen::MatrixXd displacement;  // time x node
  Eigen::MatrixXd velocity;      // time x node
  double h = 0.0;
  double dt = 0.0;  // actual step used
  double rho = 0.0;
  double epsilon = 0.0;
};

/// Time-sampled strain / strain-rate / stress signals with uniform step dt.
/// xi channels are present only when produced by the analytic cell model.
struct Trajectory {
  double dt = 0.0;
  Eigen::VectorXd b, c, sigma;
  Eigen::MatrixXd xi;       // step x L0
  Eigen::MatrixXd xi_rate;  // step x L0
  bool has_xi = false;

  Eigen::Index steps() const { return b.size(); }
  Trajectory subsample(int stride) const;
};

/// Explicit P1 finite-element solve of the fine-scale viscoelastic wave
/// equation with element-midpoint sampling of E(x/eps), nu(x/eps).
SimResult solve_multiscale_fem(const MaterialProfile& profile, const SimConfig& cfg);

/// Forced-boundary cell problem: spatially uniform stress with per-node
/// strain ODEs under the mean-strain constraint, forward Euler in time.
Trajectory solve_cell_forced(const MaterialProfile& profile, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c, double dt, int n_nodes);

/// Forward-Euler evolution of the analytic internal-variable cell model;
/// records xi and xi_rate channels.
Trajectory analytic_cell_trajectory(const HomogenizedParams& params, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& c, double dt);

}  // namespace visco
