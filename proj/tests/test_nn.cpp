#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "visco/datagen.hpp"
#include "visco/homogenize.hpp"
#include "visco/microsolver.hpp"
#include "visco/nn.hpp"
#include "visco/util.hpp"

using namespace visco;

namespace {

HomogenizedParams golden_params() { return kv_exact_params(testutil::golden_two_piece()); }

Dataset small_analytic_dataset(int N, double dt, double T, std::uint64_t seed,
                               double fine_dt) {
  MuConfig mu;
  mu.T = T;
  mu.seed = seed;
  return build_dataset(testutil::golden_two_piece(), N, dt, T, mu, Labeler::Analytic2Piece,
                       fine_dt);
}

}  // namespace

TEST_CASE("selu: reference values") {
  CHECK(selu(0.0) == 0.0);
  CHECK(selu(1.0) == doctest::Approx(1.05070).epsilon(1e-9));
  CHECK(selu(-1.0) == doctest::Approx(1.05070 * 1.67326 * (std::exp(-1.0) - 1.0)).epsilon(1e-12));
  CHECK(selu(-1.0) == doctest::Approx(-1.11133).epsilon(1e-4));
}

TEST_CASE("mlp_forward: zero weights, identity layer, dim checks") {
  MLPParams zero = make_linear(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2));
  CHECK(mlp_forward(zero, Eigen::Vector3d(1.0, -2.0, 3.0)).norm() == 0.0);

  MLPParams id = make_linear(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
  Eigen::Vector3d x(0.3, -0.7, 2.0);
  CHECK((mlp_forward(id, x) - x).norm() == 0.0);

  CHECK_THROWS_AS(mlp_forward(id, Eigen::Vector2d(1.0, 2.0)), std::invalid_argument);
}

TEST_CASE("mlp_forward_batch agrees with the single-sample path") {
  std::mt19937_64 rng(3);
  MLPParams net = make_mlp({4, 16, 16, 2}, rng);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 7);
  Eigen::MatrixXd Y = mlp_forward_batch(net, X);
  for (int j = 0; j < 7; ++j) {
    CHECK((Y.col(j) - mlp_forward(net, X.col(j))).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("rnn_forward: G = 0 gives the memoryless KV response") {
  auto p = golden_params();
  SurrogatePair sur = exact_linear_surrogate(p);
  sur.G = make_linear(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1));

  const int K = 200;
  const double dt = 0.01;
  Eigen::VectorXd b(K), c(K);
  for (int k = 0; k < K; ++k) {
    b[k] = std::sin(k * dt);
    c[k] = std::cos(k * dt);
  }
  auto out = rnn_forward(sur, b, c, dt);
  for (int k = 0; k < K; ++k) {
    CHECK(out.sigma[k] == doctest::Approx(p.E_prime * b[k] + p.nu_prime * c[k]).epsilon(1e-12));
  }
  CHECK(out.xi.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rnn_forward: exact linear maps reproduce the analytic cell model") {
  auto p = golden_params();
  auto sur = exact_linear_surrogate(p);
  const double dt = 0.004;
  const int K = 1000;
  Eigen::VectorXd b(K), c(K);
  for (int k = 0; k < K; ++k) {
    const double t = k * dt;
    b[k] = 0.1 * std::sin(2 * M_PI * t);
    c[k] = 0.1 * 2 * M_PI * std::cos(2 * M_PI * t);
  }
  auto truth = analytic_cell_trajectory(p, b, c, dt);
  auto out = rnn_forward(sur, b, c, dt);
  CHECK((out.sigma - truth.sigma).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((out.xi - truth.xi).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((out.xi_rate - truth.xi_rate).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("rnn_forward: deterministic across runs") {
  std::mt19937_64 rng(17);
  auto sur = make_surrogate(2, true, rng, {16, 16});
  Eigen::VectorXd b = Eigen::VectorXd::Zero(50), c = Eigen::VectorXd::Zero(50);
  auto o1 = rnn_forward(sur, b, c, 0.01);
  auto o2 = rnn_forward(sur, b, c, 0.01);
  CHECK((o1.xi - o2.xi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loss_accessible: trivial values and zero-norm exclusion") {
  const double dt = 0.01;
  Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(100, 0.1, 1.0);
  CHECK(loss_accessible({s}, {s}, dt) == 0.0);
  CHECK(loss_accessible({2.0 * s}, {s}, dt) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(loss_accessible({Eigen::VectorXd::Zero(100)}, {s}, dt) ==
        doctest::Approx(1.0).epsilon(1e-12));

  int skipped = 0;
  const double v = loss_accessible({s, Eigen::VectorXd::Zero(100)},
                                   {s, Eigen::VectorXd::Zero(100)}, dt, &skipped);
  CHECK(v == 0.0);
  CHECK(skipped == 1);
}

TEST_CASE("loss_inaccessible: trivial values") {
  const double dt = 0.01;
  Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(100, 0.1, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(100, 2).array() + 2.0;
  CHECK(loss_inaccessible({s}, {s}, {r}, {r}, dt) == 0.0);
  CHECK(loss_inaccessible({s}, {s}, {Eigen::MatrixXd::Zero(100, 2)}, {r}, dt) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(loss_inaccessible({2.0 * s}, {s}, {2.0 * r}, {r}, dt) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("BPTT gradient matches central finite differences") {
  Dataset data = small_analytic_dataset(3, 0.02, 0.4, 77, 0.02);
  std::vector<const Trajectory*> batch;
  for (const auto& tr : data.trajectories) batch.push_back(&tr);

  std::mt19937_64 rng(5);
  auto sur = make_surrogate(1, true, rng, {8, 8});
  // Fresh surrogates have zero biases, and every trajectory starts with
  // b(0) = 0 and xi(0) = 0, so the step-0 pre-activations sit exactly on the
  // SELU kink where the analytic one-sided derivative and the central
  // difference disagree. Jitter the biases to test at a smooth point.
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (auto net : {&sur.F, &sur.G}) {
    for (auto& b : net->bias) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = jitter(rng);
    }
  }
  const double dt = data.dt, fd_step = 1e-5;

  for (bool xi_rate_term : {true, false}) {
    SurrogatePair grad;
    loss_and_gradient(sur, batch, dt, LossKind::Inaccessible, xi_rate_term, grad);

    auto probe = [&](MLPParams SurrogatePair::*net, int layer, bool weight, Eigen::Index i,
                     Eigen::Index j) {
      auto eval = [&](double delta) {
        SurrogatePair s = sur;
        if (weight) {
          (s.*net).W[layer](i, j) += delta;
        } else {
          (s.*net).bias[layer][i] += delta;
        }
        SurrogatePair unused;
        return loss_and_gradient(s, batch, dt, LossKind::Inaccessible, xi_rate_term, unused);
      };
      const double fd = (eval(fd_step) - eval(-fd_step)) / (2 * fd_step);
      const double an = weight ? (grad.*net).W[layer](i, j) : (grad.*net).bias[layer][i];
      CHECK(std::abs(an - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    };

    // every 3rd parameter of each tensor (the full sweep runs in acceptance)
    for (auto net : {&SurrogatePair::F, &SurrogatePair::G}) {
      const MLPParams& n = sur.*net;
      for (int l = 0; l < n.n_layers(); ++l) {
        for (Eigen::Index i = 0; i < n.W[l].rows(); ++i) {
          for (Eigen::Index j = i % 3; j < n.W[l].cols(); j += 3) probe(net, l, true, i, j);
        }
        for (Eigen::Index i = 0; i < n.bias[l].size(); i += 3) probe(net, l, false, i, 0);
      }
    }
  }
}

TEST_CASE("train: zero epochs on the exact-linear surrogate") {
  // same discretization as the labels (fine_dt = dt) -> machine-precision fit
  Dataset data = small_analytic_dataset(5, 0.004, 2.0, 123, 0.004);
  auto sur = exact_linear_surrogate(golden_params());
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.loss = LossKind::Accessible;
  cfg.seed = 4;
  auto res = train(data, sur, cfg);
  REQUIRE(res.history.size() == 1);
  CHECK(res.history[0].train_loss < 1e-6);
  CHECK(res.history[0].test_accessible < 1e-6);
}

TEST_CASE("train: decreases the loss and is bit-deterministic") {
  Dataset data = small_analytic_dataset(10, 0.02, 2.0, 31, 0.002);
  std::mt19937_64 rng(2);
  auto sur = make_surrogate(1, true, rng, {24, 24});
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.batch_size = 4;
  cfg.loss = LossKind::Inaccessible;
  cfg.seed = 9;
  auto r1 = train(data, sur, cfg);
  CHECK(r1.history.back().train_loss < 0.5 * r1.history[1].train_loss);

  auto r2 = train(data, sur, cfg);
  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].test_accessible == r2.history[i].test_accessible);
  }
}

TEST_CASE("train: argument validation") {
  Dataset empty;
  std::mt19937_64 rng(2);
  auto sur = make_surrogate(1, true, rng, {8});
  TrainConfig cfg;
  CHECK_THROWS_AS(train(empty, sur, cfg), std::invalid_argument);

  Dataset data = small_analytic_dataset(3, 0.02, 0.4, 1, 0.02);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(data, sur, cfg), std::invalid_argument);

  // inaccessible loss requires hidden channels
  for (auto& tr : data.trajectories) tr.has_xi = false;
  cfg = TrainConfig{};
  cfg.epochs = 1;
  cfg.loss = LossKind::Inaccessible;
  CHECK_THROWS_AS(train(data, sur, cfg), std::invalid_argument);
}

TEST_CASE("linearity_probe: exact-linear surrogate has R^2 = 1 everywhere") {
  auto curves = linearity_probe(exact_linear_surrogate(golden_params()), default_probe_grids());
  CHECK(curves.size() == 25);  // 5 families x 5 fixed values
  for (const auto& c : curves) {
    CHECK(c.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.x.size() == 41);
  }
}

TEST_CASE("surrogate weights: ablation drops the strain-rate input") {
  std::mt19937_64 rng(8);
  auto abl = make_surrogate(3, false, rng, {10});
  CHECK(abl.f_input_dim() == 4);
  CHECK(abl.F.in_dim() == 4);
  CHECK(abl.G.in_dim() == 4);
  CHECK(abl.G.out_dim() == 3);
}
