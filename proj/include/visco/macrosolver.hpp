#pragma once

#include <Eigen/Dense>
#include <vector>

#include "visco/constitutive.hpp"
#include "visco/microsolver.hpp"

namespace visco {

/// Macroscale nodal fields plus the per-element internal variables.
struct MacroState {
  Vec u, v;  // nodal displacement / velocity
  Mat xi;    // L0 x n_elem, zero at t = 0
  Vec b, c;  // element strain / strain rate
};

/// Homogenized macroscale dynamics with a pluggable constitutive model.
/// Same P1 / lumped-mass / kick-drift skeleton as solve_multiscale_fem; the
/// microstructure period never enters (cfg.epsilon is ignored). Internal
/// variables advance per element by the given scheme.
SimResult solve_macro(const ConstitutiveModel& model, const SimConfig& cfg,
                      StepScheme scheme = StepScheme::ForwardEuler);

/// Pointwise-in-time relative error e(t) = ||u_ref - u_test||_{L2(D)} /
/// (||u_ref||_{L2(D)} + 0.01), evaluated on u_test's space-time grid; the
/// reference field is linearly interpolated in time and space onto it.
struct ErrorCurve {
  std::vector<double> times;
  std::vector<double> e;

  double max_on(double t_lo, double t_hi) const;
};

ErrorCurve relative_error(const SimResult& u_ref, const SimResult& u_test);

}  // namespace visco
