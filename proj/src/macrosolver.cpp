#include "visco/macrosolver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "visco/errors.hpp"

namespace visco {

namespace {

double eval_or_zero(const std::function<double(double)>& f, double x) {
  return f ? f(x) : 0.0;
}

// Linear interpolation of a nodal field at position x (uniform grid).
double interp_space(const Eigen::RowVectorXd& field, double h, double x) {
  const Eigen::Index n = field.size();
  const double s = x / h;
  const Eigen::Index i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), 0,
                                                  n - 2);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * field[i] + w * field[i + 1];
}

}  // namespace

SimResult solve_macro(const ConstitutiveModel& model, const SimConfig& cfg, StepScheme scheme) {
  if (!(cfg.h > 0.0) || !(cfg.dt > 0.0) || !(cfg.T > 0.0)) {
    throw ConfigError("macro: h, dt, T must be positive");
  }
  if (!(cfg.rho > 0.0)) throw ConfigError("macro: explicit dynamics requires rho > 0");

  const int n_elem = static_cast<int>(std::round(cfg.domain_length / cfg.h));
  if (std::abs(n_elem * cfg.h - cfg.domain_length) > 1e-9 * cfg.domain_length) {
    throw ConfigError("macro: h must divide the domain length");
  }
  const int n_node = n_elem + 1;

  if (const auto* analytic = dynamic_cast<const AnalyticModel*>(&model)) {
    const HomogenizedParams& p = analytic->params();
    if (p.nu_prime > 0.0 && !(cfg.dt <= 0.5 * cfg.rho * cfg.h * cfg.h / p.nu_prime)) {
      throw ConfigError("macro: dt violates the explicit stability bound 0.5*rho*h^2/nu'");
    }
    if (!(cfg.dt <= cfg.h * std::sqrt(cfg.rho / p.E_prime))) {
      throw ConfigError("macro: dt violates the elastic CFL bound h*sqrt(rho/E')");
    }
    const double a_max = p.alpha.empty() ? 0.0 : *std::max_element(p.alpha.begin(), p.alpha.end());
    if (a_max > 0.0 && !(cfg.dt < 2.0 / a_max)) {
      throw ConfigError("macro: dt violates the internal-variable bound 2/max(alpha)");
    }
  }

  const long n_steps = std::lround(cfg.T / cfg.dt);

  MacroState st;
  st.u.resize(n_node);
  st.v.resize(n_node);
  for (int i = 0; i < n_node; ++i) {
    const double x = i * cfg.h;
    st.u[i] = eval_or_zero(cfg.u_init, x);
    st.v[i] = eval_or_zero(cfg.v_init, x);
  }
  st.u[0] = 0.0;
  st.v[0] = 0.0;
  st.u[n_node - 1] = eval_or_zero(cfg.boundary_b, 0.0);
  st.xi = Mat::Zero(model.dim(), n_elem);
  st.b.resize(n_elem);
  st.c.resize(n_elem);

  SimResult res;
  res.h = cfg.h;
  res.dt = cfg.dt;
  res.rho = cfg.rho;
  res.epsilon = 0.0;
  res.nodes.resize(n_node);
  for (int i = 0; i < n_node; ++i) res.nodes[i] = i * cfg.h;
  const long n_snap = n_steps / cfg.store_stride + 1;
  res.displacement.resize(n_snap, n_node);
  res.velocity.resize(n_snap, n_node);
  res.times.reserve(n_snap);

  long snap = 0;
  auto store = [&](double t) {
    res.displacement.row(snap) = st.u.transpose();
    res.velocity.row(snap) = st.v.transpose();
    res.times.push_back(t);
    ++snap;
  };
  store(0.0);

  Eigen::VectorXd accel(n_node);
  const double inv_h = 1.0 / cfg.h;
  for (long step = 0; step < n_steps; ++step) {
    const double t = step * cfg.dt;
    st.b = (st.u.tail(n_elem) - st.u.head(n_elem)) * inv_h;
    st.c = (st.v.tail(n_elem) - st.v.head(n_elem)) * inv_h;

    const Vec sigma = model.stress_batch(st.b, st.c, st.xi);
    if (!sigma.allFinite()) {
      int bad = 0;
      for (int k = 0; k < n_elem; ++k) {
        if (!std::isfinite(sigma[k])) {
          bad = k;
          break;
        }
      }
      throw std::runtime_error("macro: non-finite stress at step " + std::to_string(step) +
                               " (t = " + std::to_string(t) + "), element " + std::to_string(bad));
    }

    for (int i = 1; i < n_node - 1; ++i) {
      const double f = cfg.forcing ? cfg.forcing(i * cfg.h, t) : 0.0;
      accel[i] = ((sigma[i] - sigma[i - 1]) * inv_h + f) / cfg.rho;
    }
    const double t_next = (step + 1) * cfg.dt;
    const double b_next = eval_or_zero(cfg.boundary_b, t_next);
    const double b_now = eval_or_zero(cfg.boundary_b, t);
    for (int i = 1; i < n_node - 1; ++i) {
      st.v[i] += cfg.dt * accel[i];
      st.u[i] += cfg.dt * st.v[i];
    }
    st.u[0] = 0.0;
    st.v[0] = 0.0;
    st.u[n_node - 1] = b_next;
    st.v[n_node - 1] = (b_next - b_now) / cfg.dt;

    if (model.dim() > 0) {
      if (scheme == StepScheme::ForwardEuler) {
        st.xi += cfg.dt * model.xi_rate_batch(st.xi, st.b);
      } else {
        const auto* analytic = dynamic_cast<const AnalyticModel*>(&model);
        if (analytic == nullptr) {
          throw UnsupportedSchemeError("macro: exact exponential step needs the analytic model");
        }
        for (int k = 0; k < n_elem; ++k) {
          st.xi.col(k) = analytic->step_exact(st.xi.col(k), st.b[k], cfg.dt);
        }
      }
    }

    if ((step + 1) % cfg.store_stride == 0) store(t_next);
  }
  res.displacement.conservativeResize(snap, n_node);
  res.velocity.conservativeResize(snap, n_node);
  return res;
}

double ErrorCurve::max_on(double t_lo, double t_hi) const {
  double m = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t_lo && times[i] <= t_hi) m = std::max(m, e[i]);
  }
  return m;
}

ErrorCurve relative_error(const SimResult& u_ref, const SimResult& u_test) {
  const double L_ref = u_ref.nodes.back();
  const double L_test = u_test.nodes.back();
  if (std::abs(L_ref - L_test) > 1e-9 * std::max(L_ref, L_test)) {
    throw std::invalid_argument("relative_error: domain lengths differ");
  }
  if (u_test.times.empty() || u_ref.times.empty()) {
    throw std::invalid_argument("relative_error: empty result");
  }
  if (u_test.times.back() > u_ref.times.back() + 1e-9) {
    throw std::invalid_argument("relative_error: reference does not cover the test horizon");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(u_test.nodes.size());
  const double h = u_test.h;
  // Trapezoidal spatial weights on the test grid.
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w[0] = w[n - 1] = 0.5 * h;

  ErrorCurve out;
  out.times = u_test.times;
  out.e.resize(u_test.times.size());

  size_t j = 0;  // reference snapshot bracketing the test time
  for (size_t i = 0; i < u_test.times.size(); ++i) {
    const double t = u_test.times[i];
    Eigen::RowVectorXd ref_t;
    if (u_ref.times.size() < 2) {
      ref_t = u_ref.displacement.row(0);
    } else {
      while (j + 2 < u_ref.times.size() && u_ref.times[j + 1] < t) ++j;
      const double t0 = u_ref.times[j];
      const double t1 = u_ref.times[j + 1];
      const double wt = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
      ref_t = (1.0 - wt) * u_ref.displacement.row(j) + wt * u_ref.displacement.row(j + 1);
    }

    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double r = interp_space(ref_t, u_ref.h, u_test.nodes[k]);
      const double d = r - u_test.displacement(i, k);
      num += w[k] * d * d;
      den += w[k] * r * r;
    }
    out.e[i] = std::sqrt(num) / (std::sqrt(den) + 0.01);
  }
  return out;
}

}  // namespace visco
