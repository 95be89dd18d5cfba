#include "visco/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "visco/homogenize.hpp"

namespace visco {

namespace {

// Fritsch-Carlson slopes for a monotonicity-limited cubic Hermite interpolant.
std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& x) {
  const int n = static_cast<int>(t.size());
  std::vector<double> h(n - 1), s(n - 1), m(n);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = t[i + 1] - t[i];
    s[i] = (x[i + 1] - x[i]) / h[i];
  }
  for (int i = 1; i < n - 1; ++i) {
    if (s[i - 1] * s[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
    }
  }
  auto endpoint = [](double h0, double h1, double s0, double s1) {
    double m0 = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (m0 * s0 <= 0.0) {
      m0 = 0.0;
    } else if (s0 * s1 <= 0.0 && std::abs(m0) > 3.0 * std::abs(s0)) {
      m0 = 3.0 * s0;
    }
    return m0;
  };
  if (n == 2) {
    m[0] = m[1] = s[0];
  } else {
    m[0] = endpoint(h[0], h[1], s[0], s[1]);
    m[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }
  return m;
}

}  // namespace

StrainSignal sample_mu(const MuConfig& cfg, double dt) {
  if (cfg.n_pieces < 2) throw std::invalid_argument("mu: n_pieces must be >= 2");
  if (!(cfg.T > 0.0) || !(cfg.step_scale > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("mu: T, step_scale, and dt must be positive");
  }
  const long n_grid = std::lround(cfg.T / dt);
  if (std::abs(n_grid * dt - cfg.T) > 1e-9 * cfg.T) {
    throw std::invalid_argument("mu: dt must divide T within rounding");
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, cfg.T);

  // Knot times: 0, sorted interior draws, T. Resample on (measure-zero) ties.
  std::vector<double> knots;
  for (int attempt = 0; attempt < 64; ++attempt) {
    knots.assign(1, 0.0);
    for (int i = 0; i < cfg.n_pieces - 1; ++i) knots.push_back(unif(rng));
    knots.push_back(cfg.T);
    std::sort(knots.begin(), knots.end());
    if (std::adjacent_find(knots.begin(), knots.end()) == knots.end()) break;
    knots.clear();
  }
  if (knots.empty()) throw std::runtime_error("mu: failed to draw distinct knot times");

  // Balanced random walk: +/-1 steps scaled by the interval length.
  std::bernoulli_distribution coin(0.5);
  std::vector<double> values(knots.size(), 0.0);
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const double delta = knots[k + 1] - knots[k];
    values[k + 1] = values[k] + (coin(rng) ? 1.0 : -1.0) * cfg.step_scale * delta;
  }

  const std::vector<double> slopes = pchip_slopes(knots, values);

  StrainSignal sig;
  sig.b.resize(n_grid + 1);
  sig.c.resize(n_grid + 1);
  size_t seg = 0;
  for (long j = 0; j <= n_grid; ++j) {
    const double t = std::min(j * dt, cfg.T);
    while (seg + 2 < knots.size() && t >= knots[seg + 1]) ++seg;
    const double h = knots[seg + 1] - knots[seg];
    const double tau = (t - knots[seg]) / h;
    const double t2 = tau * tau, t3 = t2 * tau;
    const double x0 = values[seg], x1 = values[seg + 1];
    const double m0 = slopes[seg], m1 = slopes[seg + 1];
    sig.b[j] = (2 * t3 - 3 * t2 + 1) * x0 + h * (t3 - 2 * t2 + tau) * m0 +
               (-2 * t3 + 3 * t2) * x1 + h * (t3 - t2) * m1;
    sig.c[j] = (6 * t2 - 6 * tau) * x0 / h + (3 * t2 - 4 * tau + 1) * m0 +
               (-6 * t2 + 6 * tau) * x1 / h + (3 * t2 - 2 * tau) * m1;
  }
  return sig;
}

Dataset build_dataset(const MaterialProfile& profile, int N, double dt, double T,
                      const MuConfig& mu, Labeler labeler, double fine_dt, int cell_nodes) {
  if (N < 0) throw std::invalid_argument("dataset: N must be nonnegative");
  const double stride_real = dt / fine_dt;
  const int stride = static_cast<int>(std::lround(stride_real));
  if (stride < 1 || std::abs(stride - stride_real) > 1e-9) {
    throw std::invalid_argument("dataset: fine_dt must divide dt");
  }

  Dataset ds;
  ds.dt = dt;
  ds.seed = mu.seed;
  ds.profile_digest = profile.digest();
  ds.length = std::lround(T / fine_dt) / stride + 1;

  HomogenizedParams params;
  if (labeler == Labeler::Analytic2Piece) {
    if (profile.kind() != ProfileKind::PiecewiseKV || profile.kv_layers().size() != 2) {
      throw std::invalid_argument("dataset: analytic labeler requires a 2-layer KV profile");
    }
    params = kv_exact_params(profile);
    ds.generator = "analytic-cell";
  } else {
    ds.generator = "cell-fd";
  }

  ds.trajectories.reserve(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    MuConfig draw = mu;
    draw.T = T;
    draw.seed = mu.seed + static_cast<std::uint64_t>(n);
    const StrainSignal sig = sample_mu(draw, fine_dt);
    Trajectory fine = labeler == Labeler::Analytic2Piece
                          ? analytic_cell_trajectory(params, sig.b, sig.c, fine_dt)
                          : solve_cell_forced(profile, sig.b, sig.c, fine_dt, cell_nodes);
    Trajectory sub = fine.subsample(stride);
    if (sub.steps() != ds.length) throw std::logic_error("dataset: inconsistent length");
    ds.trajectories.push_back(std::move(sub));
  }
  return ds;
}

}  // namespace visco
