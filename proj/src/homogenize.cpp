#include "visco/homogenize.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "visco/errors.hpp"

namespace visco {

namespace {

// 5-point Gauss-Legendre rule on [-1, 1].
constexpr double kGL5x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                             0.5384693101056831, 0.9061798459386640};
constexpr double kGL5w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                             0.4786286704993665, 0.2369268850561891};

double quad_unit_cell(const std::function<double(double)>& f) {
  constexpr int kIntervals = 64;  // 320 quadrature nodes
  const double w = 1.0 / kIntervals;
  double sum = 0.0;
  for (int i = 0; i < kIntervals; ++i) {
    const double a = i * w;
    for (int q = 0; q < 5; ++q) {
      const double y = a + 0.5 * w * (kGL5x[q] + 1.0);
      sum += 0.5 * w * kGL5w[q] * f(y);
    }
  }
  return sum;
}

// Ascending-coefficient polynomial product.
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

// Roots via eigenvalues of the companion matrix of the monic form.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg <= 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> roots(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()[i];
  return roots;
}

struct PoleSet {
  std::vector<double> alpha;
};

// Polish the companion-matrix roots with one Newton step against (q, dq),
// check realness/negativity, and reject nearly-repeated poles.
PoleSet polish_and_check(const std::vector<std::complex<double>>& raw,
                         const std::function<double(double)>& q,
                         const std::function<double(double)>& dq) {
  PoleSet out;
  for (const auto& z0 : raw) {
    if (std::abs(z0.imag()) > 1e-9 * std::max(std::abs(z0.real()), 1.0)) {
      throw DecompositionError("homogenize: complex root of Q encountered");
    }
    double r = z0.real();
    const double d = dq(r);
    if (d != 0.0) r -= q(r) / d;
    if (!(r < 0.0)) throw DecompositionError("homogenize: non-negative root of Q");
    out.alpha.push_back(-r);
  }
  std::sort(out.alpha.begin(), out.alpha.end());
  double max_root = out.alpha.empty() ? 0.0 : out.alpha.back();
  for (size_t i = 1; i < out.alpha.size(); ++i) {
    // The gap threshold must exceed the eigensolver's ~sqrt(eps) split of a
    // genuinely repeated root, or true degeneracies would slip through.
    if (out.alpha[i] - out.alpha[i - 1] < 1e-6 * max_root) {
      throw DegeneracyError(
          "homogenize: nearly-repeated poles; perturb or merge material layers");
    }
  }
  return out;
}

void verify_reconstruction(const HomogenizedParams& params, const MaterialProfile& profile) {
  const double residual = reconstruction_residual(params, profile);
  if (!(residual < 1e-8)) {
    throw DecompositionError("homogenize: reconstruction residual " + std::to_string(residual) +
                             " exceeds 1e-8");
  }
}

}  // namespace

std::vector<double> verification_s_grid() {
  std::vector<double> grid(60);
  for (int i = 0; i < 60; ++i) {
    grid[i] = std::pow(10.0, -3.0 + 9.0 * i / 59.0);
  }
  return grid;
}

double kv_numeric_a0(const MaterialProfile& profile, double s) {
  if (s < 0.0) throw std::domain_error("homogenize: s must be nonnegative");
  double integral = 0.0;
  if (profile.kind() == ProfileKind::PiecewiseKV) {
    for (const auto& l : profile.kv_layers()) integral += l.length / (s * l.nu + l.E);
  } else if (profile.kind() == ProfileKind::AnalyticKV) {
    integral = quad_unit_cell([&](double y) {
      auto [E, nu] = profile.sample(y);
      return 1.0 / (s * nu + E);
    });
  } else {
    throw std::invalid_argument("homogenize: kv_numeric_a0 requires a KV profile");
  }
  return 1.0 / integral;
}

double sls_numeric_a0(const MaterialProfile& profile, double s) {
  if (s < 0.0) throw std::domain_error("homogenize: s must be nonnegative");
  double integral = 0.0;
  for (const auto& l : profile.sls_layers()) {
    const double c = l.E2 / l.nu;
    const double k = l.E1 + l.E2;
    const double p = l.E1 * l.E2 / l.nu;
    integral += l.length * (s + c) / (k * s + p);
  }
  return 1.0 / integral;
}

double params_a0(const HomogenizedParams& params, double s) {
  double v = params.E_prime + params.nu_prime * s;
  for (size_t l = 0; l < params.alpha.size(); ++l) {
    v -= params.beta[l] / (s + params.alpha[l]);
  }
  return v;
}

double kernel_eval(const HomogenizedParams& params, double t) {
  if (t < 0.0) throw std::domain_error("homogenize: kernel time must be nonnegative");
  double v = 0.0;
  for (size_t l = 0; l < params.alpha.size(); ++l) {
    v -= params.beta[l] * std::exp(-params.alpha[l] * t);
  }
  return v;
}

double reconstruction_residual(const HomogenizedParams& params, const MaterialProfile& profile) {
  double worst = 0.0;
  for (double s : verification_s_grid()) {
    const double truth = params.model == ModelKind::KV ? kv_numeric_a0(profile, s)
                                                       : sls_numeric_a0(profile, s);
    worst = std::max(worst, std::abs(truth - params_a0(params, s)) / std::abs(truth));
  }
  return worst;
}

HomogenizedParams kv_exact_params(const MaterialProfile& profile) {
  const auto& layers = profile.kv_layers();
  const int n = static_cast<int>(layers.size());  // L' + 1

  HomogenizedParams params;
  params.model = ModelKind::KV;
  double inv_nu = 0.0, e_over_nu2 = 0.0;
  for (const auto& l : layers) {
    inv_nu += l.length / l.nu;
    e_over_nu2 += l.length * l.E / (l.nu * l.nu);
  }
  params.nu_prime = 1.0 / inv_nu;
  params.E_prime = e_over_nu2 / (inv_nu * inv_nu);

  if (n == 1) return params;  // homogeneous medium: no memory

  // Q(s) = sum_l d_l prod_{j != l} (E_j + nu_j s), evaluated in product form.
  auto q_eval = [&](double s) {
    double total = 0.0;
    for (int l = 0; l < n; ++l) {
      double term = layers[l].length;
      for (int j = 0; j < n; ++j)
        if (j != l) term *= layers[j].E + layers[j].nu * s;
      total += term;
    }
    return total;
  };
  auto dq_eval = [&](double s) {
    double total = 0.0;
    for (int l = 0; l < n; ++l) {
      for (int m = 0; m < n; ++m) {
        if (m == l) continue;
        double term = layers[l].length * layers[m].nu;
        for (int j = 0; j < n; ++j)
          if (j != l && j != m) term *= layers[j].E + layers[j].nu * s;
        total += term;
      }
    }
    return total;
  };
  auto p_eval = [&](double s) {
    double v = 1.0;
    for (const auto& l : layers) v *= l.E + l.nu * s;
    return v;
  };

  std::vector<double> q_coeffs;
  {
    std::vector<double> acc(1, 0.0);
    for (int l = 0; l < n; ++l) {
      std::vector<double> term = {layers[l].length};
      for (int j = 0; j < n; ++j)
        if (j != l) term = poly_mul(term, {layers[j].E, layers[j].nu});
      if (term.size() > acc.size()) acc.resize(term.size(), 0.0);
      for (size_t i = 0; i < term.size(); ++i) acc[i] += term[i];
    }
    q_coeffs = std::move(acc);
  }

  const PoleSet poles = polish_and_check(poly_roots(q_coeffs), q_eval, dq_eval);
  params.alpha = poles.alpha;
  params.beta.resize(params.alpha.size());
  for (size_t l = 0; l < params.alpha.size(); ++l) {
    const double r = -params.alpha[l];
    // Residue of C/Q at the simple pole, C = (E' + nu' s) Q - P.
    const double c_at_r = (params.E_prime + params.nu_prime * r) * q_eval(r) - p_eval(r);
    params.beta[l] = c_at_r / dq_eval(r);
  }

  verify_reconstruction(params, profile);
  return params;
}

HomogenizedParams sls_exact_params(const MaterialProfile& profile) {
  const auto& layers = profile.sls_layers();
  const int n = static_cast<int>(layers.size());  // L

  std::vector<double> c(n), k(n), p(n), d(n);
  for (int i = 0; i < n; ++i) {
    c[i] = layers[i].E2 / layers[i].nu;
    k[i] = layers[i].E1 + layers[i].E2;
    p[i] = layers[i].E1 * layers[i].E2 / layers[i].nu;
    d[i] = layers[i].length;
  }

  HomogenizedParams params;
  params.model = ModelKind::SLS;
  params.nu_prime = 0.0;
  double inv_k = 0.0;
  for (int i = 0; i < n; ++i) inv_k += d[i] / k[i];
  params.E_prime = 1.0 / inv_k;

  // Q(s) = sum_i d_i (s + c_i) prod_{j != i} (k_j s + p_j)
  auto q_eval = [&](double s) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double term = d[i] * (s + c[i]);
      for (int j = 0; j < n; ++j)
        if (j != i) term *= k[j] * s + p[j];
      total += term;
    }
    return total;
  };
  auto dq_eval = [&](double s) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double base = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) base *= k[j] * s + p[j];
      total += d[i] * base;
      for (int m = 0; m < n; ++m) {
        if (m == i) continue;
        double term = d[i] * (s + c[i]) * k[m];
        for (int j = 0; j < n; ++j)
          if (j != i && j != m) term *= k[j] * s + p[j];
        total += term;
      }
    }
    return total;
  };
  auto p_eval = [&](double s) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= k[i] * s + p[i];
    return v;
  };

  std::vector<double> q_coeffs;
  {
    std::vector<double> acc(1, 0.0);
    for (int i = 0; i < n; ++i) {
      std::vector<double> term = {d[i] * c[i], d[i]};
      for (int j = 0; j < n; ++j)
        if (j != i) term = poly_mul(term, {p[j], k[j]});
      if (term.size() > acc.size()) acc.resize(term.size(), 0.0);
      for (size_t idx = 0; idx < term.size(); ++idx) acc[idx] += term[idx];
    }
    q_coeffs = std::move(acc);
  }

  const PoleSet poles = polish_and_check(poly_roots(q_coeffs), q_eval, dq_eval);
  params.alpha = poles.alpha;
  params.beta.resize(params.alpha.size());
  for (size_t l = 0; l < params.alpha.size(); ++l) {
    const double r = -params.alpha[l];
    // Residue of C/Q at the simple pole, C = E' Q - P.
    const double c_at_r = params.E_prime * q_eval(r) - p_eval(r);
    params.beta[l] = c_at_r / dq_eval(r);
  }

  verify_reconstruction(params, profile);
  return params;
}

}  // namespace visco
