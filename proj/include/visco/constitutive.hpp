#pragma once

#include <Eigen/Dense>

#include "visco/homogenize.hpp"

namespace visco {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Internal variables xi (stress units), one vector per evaluation point.
/// Initialized to zero at t = 0.
struct InternalState {
  Vec xi;

  static InternalState zero(int dim) { return {Vec::Zero(dim)}; }
};

/// Stress law sigma = F(b, c, xi) with Markovian internal-state evolution
/// xi' = G(xi, b). Model objects are stateless and shareable; internal state
/// is owned by the caller.
class ConstitutiveModel {
 public:
  virtual ~ConstitutiveModel() = default;

  virtual int dim() const = 0;
  virtual double stress(double b, double c, const Vec& xi) const = 0;
  virtual Vec xi_rate(const Vec& xi, double b) const = 0;

  /// Batched evaluation over evaluation points (columns of xi).
  virtual Vec stress_batch(const Vec& b, const Vec& c, const Mat& xi) const;
  virtual Mat xi_rate_batch(const Mat& xi, const Vec& b) const;

  virtual bool supports_exact_exponential() const { return false; }
};

/// Exact homogenized law: KV sigma = E'b + nu'c - sum(xi), SLS drops the
/// strain-rate term; componentwise xi rate beta_l b - alpha_l xi_l.
class AnalyticModel : public ConstitutiveModel {
 public:
  explicit AnalyticModel(HomogenizedParams params);

  int dim() const override { return params_.dim(); }
  double stress(double b, double c, const Vec& xi) const override;
  Vec xi_rate(const Vec& xi, double b) const override;
  Vec stress_batch(const Vec& b, const Vec& c, const Mat& xi) const override;
  Mat xi_rate_batch(const Mat& xi, const Vec& b) const override;
  bool supports_exact_exponential() const override { return true; }

  /// xi'_l = exp(-alpha_l dt) xi_l + (beta_l b / alpha_l)(1 - exp(-alpha_l dt)),
  /// b held constant over the step.
  Vec step_exact(const Vec& xi, double b, double dt) const;

  const HomogenizedParams& params() const { return params_; }

 private:
  HomogenizedParams params_;
  Vec alpha_, beta_;
};

enum class StepScheme { ForwardEuler, ExactExponential };

/// Advance internal variables by one step of size dt under constant strain b.
Vec step_internal(const ConstitutiveModel& model, const Vec& xi, double b, double dt,
                  StepScheme scheme);

}  // namespace visco
