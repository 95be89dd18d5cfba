#include "visco/constitutive.hpp"

#include <stdexcept>

#include "visco/errors.hpp"

namespace visco {

Vec ConstitutiveModel::stress_batch(const Vec& b, const Vec& c, const Mat& xi) const {
  Vec out(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) out[i] = stress(b[i], c[i], xi.col(i));
  return out;
}

Mat ConstitutiveModel::xi_rate_batch(const Mat& xi, const Vec& b) const {
  Mat out(xi.rows(), xi.cols());
  for (Eigen::Index i = 0; i < b.size(); ++i) out.col(i) = xi_rate(xi.col(i), b[i]);
  return out;
}

AnalyticModel::AnalyticModel(HomogenizedParams params) : params_(std::move(params)) {
  alpha_ = Eigen::Map<const Vec>(params_.alpha.data(), params_.dim());
  beta_ = Eigen::Map<const Vec>(params_.beta.data(), params_.dim());
}

double AnalyticModel::stress(double b, double c, const Vec& xi) const {
  if (xi.size() != dim()) throw std::invalid_argument("constitutive: xi dimension mismatch");
  double s = params_.E_prime * b - xi.sum();
  if (params_.model == ModelKind::KV) s += params_.nu_prime * c;
  return s;
}

Vec AnalyticModel::xi_rate(const Vec& xi, double b) const {
  if (xi.size() != dim()) throw std::invalid_argument("constitutive: xi dimension mismatch");
  return beta_ * b - alpha_.cwiseProduct(xi);
}

Vec AnalyticModel::stress_batch(const Vec& b, const Vec& c, const Mat& xi) const {
  if (xi.rows() != dim() || xi.cols() != b.size()) {
    throw std::invalid_argument("constitutive: batch dimension mismatch");
  }
  Vec s = params_.E_prime * b - xi.colwise().sum().transpose();
  if (params_.model == ModelKind::KV) s += params_.nu_prime * c;
  return s;
}

Mat AnalyticModel::xi_rate_batch(const Mat& xi, const Vec& b) const {
  if (xi.rows() != dim() || xi.cols() != b.size()) {
    throw std::invalid_argument("constitutive: batch dimension mismatch");
  }
  return beta_ * b.transpose() - alpha_.asDiagonal() * xi;
}

Vec AnalyticModel::step_exact(const Vec& xi, double b, double dt) const {
  Vec decay = (-alpha_ * dt).array().exp();
  Vec fixed_point = beta_.cwiseQuotient(alpha_) * b;
  return decay.cwiseProduct(xi) + (Vec::Ones(dim()) - decay).cwiseProduct(fixed_point);
}

Vec step_internal(const ConstitutiveModel& model, const Vec& xi, double b, double dt,
                  StepScheme scheme) {
  if (!(dt > 0.0)) throw std::invalid_argument("constitutive: dt must be positive");
  switch (scheme) {
    case StepScheme::ForwardEuler:
      return xi + dt * model.xi_rate(xi, b);
    case StepScheme::ExactExponential: {
      const auto* analytic = dynamic_cast<const AnalyticModel*>(&model);
      if (analytic == nullptr || !model.supports_exact_exponential()) {
        throw UnsupportedSchemeError(
            "constitutive: exact exponential stepping requires the analytic model");
      }
      return analytic->step_exact(xi, b, dt);
    }
  }
  throw std::logic_error("constitutive: bad scheme");
}

}  // namespace visco
