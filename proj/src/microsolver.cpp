#include "visco/microsolver.hpp"

#include <cmath>
#include <stdexcept>

#include "visco/errors.hpp"

namespace visco {

namespace {

double eval_or_zero(const std::function<double(double)>& f, double x) {
  return f ? f(x) : 0.0;
}

}  // namespace

Trajectory Trajectory::subsample(int stride) const {
  if (stride < 1) throw std::invalid_argument("trajectory: stride must be >= 1");
  const Eigen::Index n = (steps() + stride - 1) / stride;
  Trajectory out;
  out.dt = dt * stride;
  out.b.resize(n);
  out.c.resize(n);
  out.sigma.resize(n);
  out.has_xi = has_xi;
  if (has_xi) {
    out.xi.resize(n, xi.cols());
    out.xi_rate.resize(n, xi_rate.cols());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index k = i * stride;
    out.b[i] = b[k];
    out.c[i] = c[k];
    out.sigma[i] = sigma[k];
    if (has_xi) {
      out.xi.row(i) = xi.row(k);
      out.xi_rate.row(i) = xi_rate.row(k);
    }
  }
  return out;
}

SimResult solve_multiscale_fem(const MaterialProfile& profile, const SimConfig& cfg) {
  if (!(cfg.h > 0.0) || !(cfg.dt > 0.0) || !(cfg.T > 0.0)) {
    throw ConfigError("fem: h, dt, T must be positive");
  }
  if (!(cfg.rho > 0.0)) throw ConfigError("fem: explicit dynamics requires rho > 0");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("fem: multiscale solve requires epsilon > 0");
  const double ratio = cfg.epsilon / cfg.h;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 4.0) {
    throw ConfigError("fem: epsilon/h must be an integer >= 4");
  }

  const int n_elem = static_cast<int>(std::round(cfg.domain_length / cfg.h));
  if (std::abs(n_elem * cfg.h - cfg.domain_length) > 1e-9 * cfg.domain_length) {
    throw ConfigError("fem: h must divide the domain length");
  }
  const int n_node = n_elem + 1;

  Eigen::VectorXd E_elem(n_elem), nu_elem(n_elem);
  double nu_max = 0.0;
  for (int k = 0; k < n_elem; ++k) {
    const double x_mid = (k + 0.5) * cfg.h;
    double y = std::fmod(x_mid / cfg.epsilon, 1.0);
    if (y < 0.0) y += 1.0;
    auto [E, nu] = profile.sample(y);
    E_elem[k] = E;
    nu_elem[k] = nu;
    nu_max = std::max(nu_max, nu);
  }
  if (!(cfg.dt <= 0.5 * cfg.rho * cfg.h * cfg.h / nu_max)) {
    throw ConfigError("fem: dt violates the explicit stability bound 0.5*rho*h^2/nu_max");
  }

  const long n_steps = std::lround(cfg.T / cfg.dt);

  Eigen::VectorXd u(n_node), v(n_node);
  for (int i = 0; i < n_node; ++i) {
    const double x = i * cfg.h;
    u[i] = eval_or_zero(cfg.u_init, x);
    v[i] = eval_or_zero(cfg.v_init, x);
  }
  u[0] = 0.0;
  v[0] = 0.0;
  u[n_node - 1] = eval_or_zero(cfg.boundary_b, 0.0);

  SimResult res;
  res.h = cfg.h;
  res.dt = cfg.dt;
  res.rho = cfg.rho;
  res.epsilon = cfg.epsilon;
  res.nodes.resize(n_node);
  for (int i = 0; i < n_node; ++i) res.nodes[i] = i * cfg.h;
  const long n_snap = n_steps / cfg.store_stride + 1;
  res.displacement.resize(n_snap, n_node);
  res.velocity.resize(n_snap, n_node);
  res.times.reserve(n_snap);

  long snap = 0;
  auto store = [&](double t) {
    res.displacement.row(snap) = u.transpose();
    res.velocity.row(snap) = v.transpose();
    res.times.push_back(t);
    ++snap;
  };
  store(0.0);

  Eigen::VectorXd sigma(n_elem), accel(n_node);
  const double inv_h = 1.0 / cfg.h;
  for (long step = 0; step < n_steps; ++step) {
    const double t = step * cfg.dt;
    // Element stress from current strain and strain rate.
    for (int k = 0; k < n_elem; ++k) {
      const double e = (u[k + 1] - u[k]) * inv_h;
      const double edot = (v[k + 1] - v[k]) * inv_h;
      sigma[k] = E_elem[k] * e + nu_elem[k] * edot;
    }
    for (int i = 1; i < n_node - 1; ++i) {
      double f = cfg.forcing ? cfg.forcing(i * cfg.h, t) : 0.0;
      accel[i] = ((sigma[i] - sigma[i - 1]) * inv_h + f) / cfg.rho;
    }
    // Kick-then-drift update; Dirichlet rows pinned to the data.
    const double t_next = (step + 1) * cfg.dt;
    const double b_next = eval_or_zero(cfg.boundary_b, t_next);
    const double b_now = eval_or_zero(cfg.boundary_b, t);
    for (int i = 1; i < n_node - 1; ++i) {
      v[i] += cfg.dt * accel[i];
      u[i] += cfg.dt * v[i];
    }
    u[0] = 0.0;
    v[0] = 0.0;
    u[n_node - 1] = b_next;
    v[n_node - 1] = (b_next - b_now) / cfg.dt;

    if ((step + 1) % cfg.store_stride == 0) store(t_next);
  }
  res.displacement.conservativeResize(snap, n_node);
  res.velocity.conservativeResize(snap, n_node);
  return res;
}

Trajectory solve_cell_forced(const MaterialProfile& profile, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c, double dt, int n_nodes) {
  if (b.size() != c.size()) throw std::invalid_argument("cell: b and c length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("cell: dt must be positive");
  if (b.size() == 0) throw std::invalid_argument("cell: empty strain signal");
  if (std::abs(b[0]) > 1e-12) {
    throw std::invalid_argument("cell: strain signal must start at zero");
  }
  if (profile.kind() == ProfileKind::AnalyticKV && n_nodes < 50) {
    throw std::invalid_argument("cell: analytic profiles require n_nodes >= 50");
  }
  if (n_nodes < 2) throw std::invalid_argument("cell: n_nodes must be >= 2");

  Eigen::VectorXd E(n_nodes), nu(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    auto [Ei, nui] = profile.sample((i + 0.5) / n_nodes);
    E[i] = Ei;
    nu[i] = nui;
  }
  const double w = 1.0 / n_nodes;
  const double mean_inv_nu = w * nu.cwiseInverse().sum();

  const Eigen::Index n = b.size();
  Trajectory traj;
  traj.dt = dt;
  traj.b = b;
  traj.c = c;
  traj.sigma.resize(n);

  // Per-node strains e_i with uniform stress: nu_i e_i' = sigma - E_i e_i,
  // sigma determined by the constraint <e'> = b'.
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_nodes);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mean_Ee_nu = w * (E.cwiseProduct(e).cwiseQuotient(nu)).sum();
    const double sigma = (c[k] + mean_Ee_nu) / mean_inv_nu;
    traj.sigma[k] = sigma;
    e += dt * (Eigen::VectorXd::Constant(n_nodes, sigma) - E.cwiseProduct(e)).cwiseQuotient(nu);
  }
  return traj;
}

Trajectory analytic_cell_trajectory(const HomogenizedParams& params, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& c, double dt) {
  if (b.size() != c.size()) throw std::invalid_argument("cell: b and c length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("cell: dt must be positive");
  const AnalyticModel model(params);
  const int L0 = model.dim();
  const Eigen::Index n = b.size();

  Trajectory traj;
  traj.dt = dt;
  traj.b = b;
  traj.c = c;
  traj.sigma.resize(n);
  traj.xi.resize(n, L0);
  traj.xi_rate.resize(n, L0);
  traj.has_xi = true;

  Vec xi = Vec::Zero(L0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec rate = model.xi_rate(xi, b[k]);
    traj.sigma[k] = model.stress(b[k], c[k], xi);
    traj.xi.row(k) = xi.transpose();
    traj.xi_rate.row(k) = rate.transpose();
    xi += dt * rate;
  }
  return traj;
}

}  // namespace visco
