#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "visco/constitutive.hpp"
#include "visco/datagen.hpp"

namespace visco {

// SELU activation constants.
constexpr double kSeluAlpha = 1.67326;
constexpr double kSeluScale = 1.05070;

double selu(double x);

/// Affine-SELU chain with a final affine layer (no activation). A single
/// weight matrix is a plain linear map.
struct MLPParams {
  std::vector<Eigen::MatrixXd> W;     // W[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> bias;  // bias[l]: sizes[l+1]

  int in_dim() const { return static_cast<int>(W.front().cols()); }
  int out_dim() const { return static_cast<int>(W.back().rows()); }
  int n_layers() const { return static_cast<int>(W.size()); }
};

/// LeCun-normal initialization (variance 1/fan_in), suited to SELU.
MLPParams make_mlp(const std::vector<int>& sizes, std::mt19937_64& rng);
MLPParams make_linear(const Eigen::MatrixXd& W, const Eigen::VectorXd& b);

Eigen::VectorXd mlp_forward(const MLPParams& net, const Eigen::VectorXd& x);
Eigen::MatrixXd mlp_forward_batch(const MLPParams& net, const Eigen::MatrixXd& X);

/// Recurrent surrogate: F maps (b, c, xi) -> stress, G maps (xi, b) -> xi
/// rate. With use_strain_rate = false, F drops the c input.
struct SurrogatePair {
  MLPParams F, G;
  int L0 = 0;
  bool use_strain_rate = true;

  int f_input_dim() const { return (use_strain_rate ? 2 : 1) + L0; }
  int g_input_dim() const { return L0 + 1; }
};

/// Fresh random surrogate with the given hidden layout (default 3 x 100).
SurrogatePair make_surrogate(int L0, bool use_strain_rate, std::mt19937_64& rng,
                             const std::vector<int>& hidden = {100, 100, 100});

/// Single-layer linear surrogate that reproduces the analytic model exactly.
SurrogatePair exact_linear_surrogate(const HomogenizedParams& params);

struct RnnOutput {
  Eigen::VectorXd sigma;
  Eigen::MatrixXd xi;       // step x L0
  Eigen::MatrixXd xi_rate;  // step x L0
};

/// Unroll the surrogate over the strain signal: xi(0) = 0, forward-Euler
/// state update xi_{k+1} = xi_k + dt G(xi_k, b_k).
RnnOutput rnn_forward(const SurrogatePair& sur, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, double dt);

enum class LossKind { Accessible, Inaccessible };

/// Mean over trajectories of relative discrete-L2 stress error. Zero-norm
/// targets are excluded; their count is added to *skipped when given.
double loss_accessible(const std::vector<Eigen::VectorXd>& pred,
                       const std::vector<Eigen::VectorXd>& truth, double dt,
                       int* skipped = nullptr);

/// Accessible term plus the mean relative L2 error of the hidden-rate
/// channels.
double loss_inaccessible(const std::vector<Eigen::VectorXd>& pred_sigma,
                         const std::vector<Eigen::VectorXd>& true_sigma,
                         const std::vector<Eigen::MatrixXd>& pred_xi_rate,
                         const std::vector<Eigen::MatrixXd>& true_xi_rate, double dt,
                         int* skipped = nullptr);

struct TrainConfig {
  int epochs = 0;
  int batch_size = 1;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::Inaccessible;
  std::uint64_t seed = 0;
  bool xi_rate_term = true;  // false: compare xi levels instead of rates
  double test_fraction = 0.2;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accessible = 0.0;
  double test_train_kind = 0.0;  // test loss under the training loss kind
};

struct TrainResult {
  SurrogatePair surrogate;
  std::vector<EpochRecord> history;
  int skipped_zero_norm = 0;
};

/// Mini-batch Adam with backpropagation through the full trajectory.
/// The 80/20 train/test split is by trajectory and seeded.
TrainResult train(const Dataset& data, SurrogatePair sur, const TrainConfig& cfg);

/// Loss of the surrogate over a set of trajectories (no training).
double evaluate_loss(const SurrogatePair& sur, const std::vector<const Trajectory*>& trajs,
                     double dt, LossKind kind, int* skipped = nullptr);

/// Batch loss and its BPTT gradient, with the gradient returned in
/// weight-shaped storage (grad.F, grad.G). Exposed so the backward pass can
/// be verified against finite differences.
double loss_and_gradient(const SurrogatePair& sur, const std::vector<const Trajectory*>& batch,
                         double dt, LossKind kind, bool xi_rate_term, SurrogatePair& grad);

struct ProbeGrids {
  Eigen::VectorXd b_grid, c_grid, xi_grid;
  Eigen::VectorXd b_fixed, c_fixed, xi_fixed;  // 5 values per family
};

/// Defaults: b in [-0.5, 0.5], c in [-2, 2], xi in [-xi_range, xi_range].
ProbeGrids default_probe_grids(double xi_range = 0.1);

struct ProbeCurve {
  std::string family;
  double fixed_value = 0.0;
  Eigen::VectorXd x, y;
  double r2 = 0.0;
};

/// The five curve families: sigma vs b, sigma vs c, sigma vs xi, xi-rate vs
/// b, xi-rate vs xi; least-squares linear-fit R^2 per curve. Vector hidden
/// states vary along the all-ones direction and rates are reported through
/// the summed channel entering the stress.
std::vector<ProbeCurve> linearity_probe(const SurrogatePair& sur, const ProbeGrids& grids);

/// Constitutive-model adapter so the surrogate can drive the macro solver.
class SurrogateModel : public ConstitutiveModel {
 public:
  explicit SurrogateModel(SurrogatePair sur) : sur_(std::move(sur)) {}

  int dim() const override { return sur_.L0; }
  double stress(double b, double c, const Vec& xi) const override;
  Vec xi_rate(const Vec& xi, double b) const override;
  Vec stress_batch(const Vec& b, const Vec& c, const Mat& xi) const override;
  Mat xi_rate_batch(const Mat& xi, const Vec& b) const override;

  const SurrogatePair& surrogate() const { return sur_; }

 private:
  SurrogatePair sur_;
};

}  // namespace visco
