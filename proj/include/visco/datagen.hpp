#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "visco/material.hpp"
#include "visco/microsolver.hpp"

namespace visco {

/// Random strain measure: random time partition, balanced random walk at the
/// knots, monotone cubic Hermite interpolation between them.
struct MuConfig {
  double T = 4.0;
  int n_pieces = 10;
  double step_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Strain signal and its analytic derivative on the uniform dt grid.
struct StrainSignal {
  Eigen::VectorXd b, c;
};

StrainSignal sample_mu(const MuConfig& cfg, double dt);

enum class Labeler { Analytic2Piece, CellFD };

struct Dataset {
  double dt = 0.0;
  Eigen::Index length = 0;
  std::vector<Trajectory> trajectories;
  std::string profile_digest;
  std::string generator;
  std::uint64_t seed = 0;
};

/// N i.i.d. strain draws labeled by the chosen cell solver at fine_dt, then
/// subsampled to dt. Per-trajectory seeds are base seed + index.
Dataset build_dataset(const MaterialProfile& profile, int N, double dt, double T,
                      const MuConfig& mu, Labeler labeler, double fine_dt = 0.001,
                      int cell_nodes = 200);

}  // namespace visco
