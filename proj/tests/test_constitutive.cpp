#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "visco/constitutive.hpp"
#include "visco/datagen.hpp"
#include "visco/errors.hpp"
#include "visco/nn.hpp"
#include "visco/util.hpp"

using namespace visco;

namespace {

HomogenizedParams golden_params() { return kv_exact_params(testutil::golden_two_piece()); }

}  // namespace

TEST_CASE("analytic stress: zero inputs, steady state, pure strain rate") {
  AnalyticModel model(golden_params());
  const auto& p = model.params();
  CHECK(model.stress(0.0, 0.0, Vec::Zero(1)) == 0.0);

  // steady state xi = beta*b/alpha gives the relaxed modulus
  Vec xi_ss(1);
  xi_ss[0] = p.beta[0] / p.alpha[0];
  CHECK(model.stress(1.0, 0.0, xi_ss) == doctest::Approx(1.5).epsilon(1e-9));

  CHECK(model.stress(0.0, 1.0, Vec::Zero(1)) == doctest::Approx(2.0 / 15.0).epsilon(1e-9));
}

TEST_CASE("analytic stress: SLS ignores the strain rate") {
  auto p = sls_exact_params(MaterialProfile::piecewise_sls({{1.0, 1.0, 3.0, 0.2}}));
  AnalyticModel model(p);
  CHECK(model.stress(1.0, 0.0, Vec::Zero(1)) ==
        doctest::Approx(model.stress(1.0, 100.0, Vec::Zero(1))).epsilon(1e-14));
}

TEST_CASE("analytic xi_rate: zeros, fixed point, golden value") {
  AnalyticModel model(golden_params());
  const auto& p = model.params();
  CHECK(model.xi_rate(Vec::Zero(1), 0.0).norm() == 0.0);

  Vec xi_ss(1);
  xi_ss[0] = p.beta[0] * 2.0 / p.alpha[0];
  CHECK(model.xi_rate(xi_ss, 2.0).norm() < 1e-14);

  CHECK(model.xi_rate(Vec::Zero(1), 1.0)[0] == doctest::Approx(0.740741).epsilon(1e-5));
}

TEST_CASE("dimension mismatches are rejected") {
  AnalyticModel model(golden_params());
  CHECK_THROWS_AS(model.stress(0.0, 0.0, Vec::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(model.xi_rate(Vec::Zero(3), 0.0), std::invalid_argument);
}

TEST_CASE("step_internal: forward Euler examples") {
  AnalyticModel model(golden_params());
  CHECK(step_internal(model, Vec::Zero(1), 0.0, 0.5, StepScheme::ForwardEuler).norm() == 0.0);
  Vec xi = step_internal(model, Vec::Zero(1), 1.0, 0.001, StepScheme::ForwardEuler);
  CHECK(xi[0] == doctest::Approx(0.000740741).epsilon(1e-5));
}

TEST_CASE("step_internal: exact exponential converges to the fixed point for any dt") {
  AnalyticModel model(golden_params());
  const auto& p = model.params();
  for (double dt : {0.001, 0.05, 1.0}) {
    Vec xi = Vec::Zero(1);
    for (int k = 0; k < 4000; ++k) xi = step_internal(model, xi, 1.0, dt, StepScheme::ExactExponential);
    CHECK(xi[0] == doctest::Approx(p.beta[0] / p.alpha[0]).epsilon(1e-9));
  }
}

TEST_CASE("step_internal: exact exponential unsupported on the surrogate") {
  std::mt19937_64 rng(1);
  SurrogateModel model(make_surrogate(1, true, rng, {8}));
  CHECK_THROWS_AS(step_internal(model, Vec::Zero(1), 1.0, 0.1, StepScheme::ExactExponential),
                  UnsupportedSchemeError);
}

TEST_CASE("linearity: superposition of stress and xi_rate") {
  std::mt19937_64 rng(7);
  AnalyticModel model(kv_exact_params(testutil::random_kv(rng, 5, 0.5, 4.0)));
  const int L = model.dim();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int iter = 0; iter < 10; ++iter) {
    Vec x1 = Vec::NullaryExpr(L, [&](Eigen::Index) { return u(rng); });
    Vec x2 = Vec::NullaryExpr(L, [&](Eigen::Index) { return u(rng); });
    const double b1 = u(rng), b2 = u(rng), c1 = u(rng), c2 = u(rng), a = u(rng);
    CHECK(model.stress(b1 + a * b2, c1 + a * c2, x1 + a * x2) ==
          doctest::Approx(model.stress(b1, c1, x1) + a * model.stress(b2, c2, x2))
              .epsilon(1e-12));
    CHECK((model.xi_rate(x1 + a * x2, b1 + a * b2) -
           (model.xi_rate(x1, b1) + a * model.xi_rate(x2, b2)))
              .norm() < 1e-12);
  }
}

TEST_CASE("forward Euler internal step stays bounded at dt = 1/max alpha") {
  AnalyticModel model(golden_params());
  const double dt = 1.0 / model.params().alpha[0];
  Vec xi = Vec::Zero(1);
  double peak = 0.0;
  for (int k = 0; k < 10000; ++k) {
    xi = step_internal(model, xi, 1.0, dt, StepScheme::ForwardEuler);
    peak = std::max(peak, std::abs(xi[0]));
  }
  CHECK(peak < 1.0);
  CHECK(std::isfinite(xi[0]));
}

TEST_CASE("kernel/ODE equivalence on a smooth strain signal") {
  auto p = golden_params();
  AnalyticModel model(p);
  const double dt = 1e-4, T = 4.0;
  const int K = static_cast<int>(T / dt);

  // strain signal with b(0) = 0 and analytic derivative
  auto bf = [](double t) { return 0.3 * std::sin(2 * M_PI * t) + 0.1 * t; };
  auto cf = [](double t) { return 0.3 * 2 * M_PI * std::cos(2 * M_PI * t) + 0.1; };

  // internal-variable stress with the exact exponential integrator
  Eigen::VectorXd sig_ode(K);
  Vec xi = Vec::Zero(1);
  for (int k = 0; k < K; ++k) {
    const double t = k * dt;
    sig_ode[k] = model.stress(bf(t), cf(t), xi);
    xi = model.step_exact(xi, bf(t), dt);
  }

  // convolution form E'b + nu'c + int_0^t kappa(t - tau) b(tau) dtau,
  // trapezoidal quadrature, evaluated on a coarser grid for speed
  const int stride = 50;
  const int M = K / stride;
  Eigen::VectorXd sig_conv(M), sig_ode_sub(M);
  for (int m = 0; m < M; ++m) {
    const int k = m * stride;
    const double t = k * dt;
    double integral = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double w = (j == 0 || j == k) ? 0.5 : 1.0;
      integral += w * kernel_eval(p, t - j * dt) * bf(j * dt) * dt;
    }
    sig_conv[m] = p.E_prime * bf(t) + p.nu_prime * cf(t) + integral;
    sig_ode_sub[m] = sig_ode[k];
  }
  CHECK(rel_l2_error(sig_ode_sub, sig_conv, dt * stride) < 1e-3);
}
