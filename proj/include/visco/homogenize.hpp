#pragma once

#include <vector>

#include "visco/material.hpp"

namespace visco {

enum class ModelKind { KV, SLS };

/// Markovian parametrization of the homogenized Laplace symbol:
///   KV:  a0(s) = E' + nu'*s - sum_l beta_l / (s + alpha_l)
///   SLS: a0(s) = E'         - sum_l beta_l / (s + alpha_l)
struct HomogenizedParams {
  ModelKind model = ModelKind::KV;
  double E_prime = 0.0;
  double nu_prime = 0.0;  // zero for SLS
  std::vector<double> alpha;  // positive decay rates
  std::vector<double> beta;   // real residues

  int dim() const { return static_cast<int>(alpha.size()); }
};

/// Homogenized symbol (inverse average of 1/(s*nu+E)); exact layer sums for
/// piecewise profiles, composite Gauss quadrature for analytic ones.
double kv_numeric_a0(const MaterialProfile& profile, double s);

/// SLS homogenized symbol (inverse average of (s+c)/(k*s+p)).
double sls_numeric_a0(const MaterialProfile& profile, double s);

/// Evaluate the pole/residue form of the symbol.
double params_a0(const HomogenizedParams& params, double s);

/// Exact pole/residue decomposition for a piecewise KV profile.
HomogenizedParams kv_exact_params(const MaterialProfile& profile);

/// Exact pole/residue decomposition for a piecewise SLS profile.
HomogenizedParams sls_exact_params(const MaterialProfile& profile);

/// Memory kernel kappa(t) = -sum_l beta_l exp(-alpha_l t).
double kernel_eval(const HomogenizedParams& params, double t);

/// Max relative mismatch |a0_numeric - a0_params| / |a0_numeric| over the
/// 60-point log-spaced verification grid s in [1e-3, 1e6].
double reconstruction_residual(const HomogenizedParams& params,
                               const MaterialProfile& profile);

/// The s-grid used for decomposition verification.
std::vector<double> verification_s_grid();

}  // namespace visco
