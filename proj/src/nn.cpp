#include "visco/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "visco/util.hpp"

namespace visco {

namespace {

Eigen::MatrixXd selu_mat(const Eigen::MatrixXd& z) {
  const auto a = z.array();
  return (kSeluScale * (a.max(0.0) + kSeluAlpha * (a.min(0.0).exp() - 1.0))).matrix();
}

Eigen::MatrixXd selu_grad_mat(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0)
      .select(Eigen::ArrayXXd::Constant(z.rows(), z.cols(), kSeluScale),
              kSeluScale * kSeluAlpha * z.array().exp())
      .matrix();
}

struct Grads {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  static Grads zero_like(const MLPParams& net) {
    Grads g;
    for (int l = 0; l < net.n_layers(); ++l) {
      g.W.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
      g.b.push_back(Eigen::VectorXd::Zero(net.bias[l].size()));
    }
    return g;
  }
  void set_zero() {
    for (auto& m : W) m.setZero();
    for (auto& v : b) v.setZero();
  }
};

struct Cache {
  Eigen::MatrixXd X;
  std::vector<Eigen::MatrixXd> Z;
};

const Eigen::MatrixXd& forward_cached(const MLPParams& net, const Eigen::MatrixXd& X, Cache& c) {
  const int L = net.n_layers();
  c.X = X;
  c.Z.resize(L);
  Eigen::MatrixXd act;
  const Eigen::MatrixXd* a = &c.X;
  for (int l = 0; l < L; ++l) {
    c.Z[l].noalias() = net.W[l] * (*a);
    c.Z[l].colwise() += net.bias[l];
    if (l + 1 < L) {
      act = selu_mat(c.Z[l]);
      a = &act;
    }
  }
  return c.Z.back();
}

// Accumulates parameter gradients and returns the input gradient. dY is the
// gradient at the (linear) output layer.
Eigen::MatrixXd backward(const MLPParams& net, const Cache& c, Eigen::MatrixXd dZ, Grads& g) {
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    if (l == 0) {
      g.W[l].noalias() += dZ * c.X.transpose();
      g.b[l] += dZ.rowwise().sum();
      return net.W[l].transpose() * dZ;
    }
    g.W[l].noalias() += dZ * selu_mat(c.Z[l - 1]).transpose();
    g.b[l] += dZ.rowwise().sum();
    Eigen::MatrixXd dA = net.W[l].transpose() * dZ;
    dZ = dA.cwiseProduct(selu_grad_mat(c.Z[l - 1]));
  }
  return {};
}

// One Adam state/step per parameter tensor, applied in declaration order.
struct Adam {
  Grads m, v;
  long t = 0;

  explicit Adam(const MLPParams& f, const MLPParams& g)
      : m(make(f, g)), v(make(f, g)) {}

  static Grads make(const MLPParams& f, const MLPParams& g) {
    Grads all = Grads::zero_like(f);
    Grads gg = Grads::zero_like(g);
    all.W.insert(all.W.end(), gg.W.begin(), gg.W.end());
    all.b.insert(all.b.end(), gg.b.begin(), gg.b.end());
    return all;
  }

  void step(SurrogatePair& sur, const Grads& gF, const Grads& gG, const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    size_t idx = 0;
    auto update = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, Eigen::MatrixXd& mm,
                      Eigen::MatrixXd& vv) {
      mm = cfg.adam_beta1 * mm + (1.0 - cfg.adam_beta1) * grad;
      vv = cfg.adam_beta2 * vv + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
      theta.array() -= cfg.learning_rate * (mm.array() / bc1) /
                       ((vv.array() / bc2).sqrt() + cfg.adam_eps);
    };
    auto update_vec = [&](Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                          Eigen::VectorXd& mm, Eigen::VectorXd& vv) {
      mm = cfg.adam_beta1 * mm + (1.0 - cfg.adam_beta1) * grad;
      vv = cfg.adam_beta2 * vv + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
      theta.array() -= cfg.learning_rate * (mm.array() / bc1) /
                       ((vv.array() / bc2).sqrt() + cfg.adam_eps);
    };
    for (int l = 0; l < sur.F.n_layers(); ++l, ++idx) update(sur.F.W[l], gF.W[l], m.W[idx], v.W[idx]);
    for (int l = 0; l < sur.G.n_layers(); ++l, ++idx) update(sur.G.W[l], gG.W[l], m.W[idx], v.W[idx]);
    idx = 0;
    for (int l = 0; l < sur.F.n_layers(); ++l, ++idx) update_vec(sur.F.bias[l], gF.b[l], m.b[idx], v.b[idx]);
    for (int l = 0; l < sur.G.n_layers(); ++l, ++idx) update_vec(sur.G.bias[l], gG.b[l], m.b[idx], v.b[idx]);
  }
};

struct BatchForward {
  Eigen::MatrixXd sigma_hat;              // K x B
  std::vector<Eigen::MatrixXd> rate_hat;  // K entries of L0 x B
  std::vector<Eigen::MatrixXd> xi_hat;    // K entries of L0 x B
  std::vector<Cache> cache_f, cache_g;    // filled only when caching
};

void rnn_batch_forward(const SurrogatePair& sur, const std::vector<const Trajectory*>& batch,
                       double dt, bool keep_cache, BatchForward& out) {
  const int B = static_cast<int>(batch.size());
  const Eigen::Index K = batch.front()->steps();
  const int L0 = sur.L0;

  out.sigma_hat.resize(K, B);
  out.rate_hat.assign(K, Eigen::MatrixXd());
  out.xi_hat.assign(K, Eigen::MatrixXd());
  if (keep_cache) {
    out.cache_f.resize(K);
    out.cache_g.resize(K);
  }

  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(L0, B);
  Eigen::MatrixXd fin(sur.f_input_dim(), B), gin(L0 + 1, B);
  Cache scratch_f, scratch_g;
  for (Eigen::Index k = 0; k < K; ++k) {
    for (int j = 0; j < B; ++j) {
      fin(0, j) = batch[j]->b[k];
      if (sur.use_strain_rate) fin(1, j) = batch[j]->c[k];
      gin(L0, j) = batch[j]->b[k];
    }
    fin.bottomRows(L0) = xi;
    gin.topRows(L0) = xi;

    Cache& cf = keep_cache ? out.cache_f[k] : scratch_f;
    Cache& cg = keep_cache ? out.cache_g[k] : scratch_g;
    out.sigma_hat.row(k) = forward_cached(sur.F, fin, cf).row(0);
    const Eigen::MatrixXd& rate = forward_cached(sur.G, gin, cg);
    out.rate_hat[k] = rate;
    out.xi_hat[k] = xi;
    xi += dt * rate;
  }
}

struct BatchLoss {
  double value = 0.0;
  int valid = 0;
  int skipped = 0;
  Eigen::MatrixXd d_sigma;                 // K x B
  std::vector<Eigen::MatrixXd> d_rate;     // per step, L0 x B
  std::vector<Eigen::MatrixXd> d_xi;       // per step, L0 x B (xi-level term)
};

BatchLoss compute_batch_loss(const std::vector<const Trajectory*>& batch, double dt,
                             LossKind kind, bool xi_rate_term, const BatchForward& fwd,
                             bool want_grad) {
  const int B = static_cast<int>(batch.size());
  const Eigen::Index K = batch.front()->steps();
  const int L0 = static_cast<int>(fwd.rate_hat.front().rows());

  BatchLoss out;
  if (want_grad) {
    out.d_sigma = Eigen::MatrixXd::Zero(K, B);
    if (kind == LossKind::Inaccessible) {
      auto& target = xi_rate_term ? out.d_rate : out.d_xi;
      target.assign(K, Eigen::MatrixXd::Zero(L0, B));
    }
  }

  std::vector<double> traj_loss(B, 0.0);
  std::vector<bool> traj_valid(B, true);
  for (int j = 0; j < B; ++j) {
    const Trajectory& tr = *batch[j];
    const double sig_norm = l2_norm(tr.sigma, dt);
    if (sig_norm == 0.0) {
      traj_valid[j] = false;
      ++out.skipped;
      continue;
    }
    const Eigen::VectorXd err = fwd.sigma_hat.col(j) - tr.sigma;
    const double err_norm = l2_norm(err, dt);
    traj_loss[j] = err_norm / sig_norm;
    if (want_grad && err_norm > 0.0) {
      out.d_sigma.col(j) = dt / (err_norm * sig_norm) * err;
    }

    if (kind == LossKind::Inaccessible) {
      if (!tr.has_xi) {
        throw std::invalid_argument("loss: inaccessible loss requires hidden-variable data");
      }
      double ref_sq = 0.0, err_sq = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) {
        const auto truth = xi_rate_term ? tr.xi_rate.row(k) : tr.xi.row(k);
        const auto pred =
            xi_rate_term ? fwd.rate_hat[k].col(j).transpose() : fwd.xi_hat[k].col(j).transpose();
        ref_sq += truth.squaredNorm();
        err_sq += (pred - truth).squaredNorm();
      }
      const double ref_norm = std::sqrt(dt * ref_sq);
      const double diff_norm = std::sqrt(dt * err_sq);
      if (ref_norm == 0.0) {
        traj_valid[j] = false;
        traj_loss[j] = 0.0;
        ++out.skipped;
        if (want_grad) out.d_sigma.col(j).setZero();
        continue;
      }
      traj_loss[j] += diff_norm / ref_norm;
      if (want_grad && diff_norm > 0.0) {
        const double scale = dt / (diff_norm * ref_norm);
        auto& target = xi_rate_term ? out.d_rate : out.d_xi;
        for (Eigen::Index k = 0; k < K; ++k) {
          const auto truth = xi_rate_term ? tr.xi_rate.row(k) : tr.xi.row(k);
          const auto pred =
              xi_rate_term ? fwd.rate_hat[k].col(j).transpose() : fwd.xi_hat[k].col(j).transpose();
          target[k].col(j) = scale * (pred - truth).transpose();
        }
      }
    }
  }

  for (int j = 0; j < B; ++j) {
    if (traj_valid[j]) {
      out.value += traj_loss[j];
      ++out.valid;
    }
  }
  if (out.valid > 0) {
    out.value /= out.valid;
    if (want_grad) {
      const double inv = 1.0 / out.valid;
      out.d_sigma *= inv;
      for (auto& m : out.d_rate) m *= inv;
      for (auto& m : out.d_xi) m *= inv;
    }
  }
  return out;
}

void rnn_batch_backward(const SurrogatePair& sur, double dt, const BatchForward& fwd,
                        const BatchLoss& loss, LossKind kind, bool xi_rate_term, Grads& gF,
                        Grads& gG) {
  const Eigen::Index K = fwd.sigma_hat.rows();
  const int B = static_cast<int>(fwd.sigma_hat.cols());
  const int L0 = sur.L0;
  const int xi_row = sur.use_strain_rate ? 2 : 1;

  Eigen::MatrixXd adj_xi = Eigen::MatrixXd::Zero(L0, B);
  for (Eigen::Index k = K - 1; k >= 0; --k) {
    const Eigen::MatrixXd d_fin =
        backward(sur.F, fwd.cache_f[k], loss.d_sigma.row(k), gF);

    Eigen::MatrixXd d_rate = dt * adj_xi;
    if (kind == LossKind::Inaccessible && xi_rate_term) d_rate += loss.d_rate[k];
    const Eigen::MatrixXd d_gin = backward(sur.G, fwd.cache_g[k], d_rate, gG);

    adj_xi += d_fin.middleRows(xi_row, L0) + d_gin.topRows(L0);
    if (kind == LossKind::Inaccessible && !xi_rate_term) adj_xi += loss.d_xi[k];
  }
}

double fit_r2(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.size());
  const double xm = x.mean(), ym = y.mean();
  const Eigen::VectorXd xc = x.array() - xm, yc = y.array() - ym;
  const double sxx = xc.squaredNorm(), syy = yc.squaredNorm();
  if (syy == 0.0) return 1.0;  // constant output is trivially linear
  if (sxx == 0.0) return 0.0;
  const double sxy = xc.dot(yc);
  const double ss_res = syy - sxy * sxy / sxx;
  return 1.0 - ss_res / syy;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

}  // namespace

double selu(double x) {
  return kSeluScale * (std::max(0.0, x) + std::min(0.0, kSeluAlpha * (std::exp(x) - 1.0)));
}

MLPParams make_mlp(const std::vector<int>& sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
  MLPParams net;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(sizes[l])));
    Eigen::MatrixXd W(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = dist(rng);
    net.W.push_back(std::move(W));
    net.bias.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return net;
}

MLPParams make_linear(const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
  MLPParams net;
  net.W.push_back(W);
  net.bias.push_back(b);
  return net;
}

Eigen::VectorXd mlp_forward(const MLPParams& net, const Eigen::VectorXd& x) {
  if (x.size() != net.in_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
  Eigen::VectorXd a = x;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::VectorXd z = net.W[l] * a + net.bias[l];
    a = (l + 1 < net.n_layers()) ? Eigen::VectorXd(selu_mat(z)) : z;
  }
  return a;
}

Eigen::MatrixXd mlp_forward_batch(const MLPParams& net, const Eigen::MatrixXd& X) {
  if (X.rows() != net.in_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
  Eigen::MatrixXd a = X;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::MatrixXd z = net.W[l] * a;
    z.colwise() += net.bias[l];
    a = (l + 1 < net.n_layers()) ? Eigen::MatrixXd(selu_mat(z)) : z;
  }
  return a;
}

SurrogatePair make_surrogate(int L0, bool use_strain_rate, std::mt19937_64& rng,
                             const std::vector<int>& hidden) {
  if (L0 < 0) throw std::invalid_argument("surrogate: L0 must be nonnegative");
  SurrogatePair sur;
  sur.L0 = L0;
  sur.use_strain_rate = use_strain_rate;
  std::vector<int> f_sizes = {sur.f_input_dim()};
  f_sizes.insert(f_sizes.end(), hidden.begin(), hidden.end());
  f_sizes.push_back(1);
  std::vector<int> g_sizes = {sur.g_input_dim()};
  g_sizes.insert(g_sizes.end(), hidden.begin(), hidden.end());
  g_sizes.push_back(std::max(L0, 1));
  sur.F = make_mlp(f_sizes, rng);
  sur.G = make_mlp(g_sizes, rng);
  return sur;
}

SurrogatePair exact_linear_surrogate(const HomogenizedParams& params) {
  const int L0 = params.dim();
  SurrogatePair sur;
  sur.L0 = L0;
  sur.use_strain_rate = true;

  Eigen::MatrixXd Wf = Eigen::MatrixXd::Zero(1, 2 + L0);
  Wf(0, 0) = params.E_prime;
  Wf(0, 1) = params.model == ModelKind::KV ? params.nu_prime : 0.0;
  for (int l = 0; l < L0; ++l) Wf(0, 2 + l) = -1.0;
  sur.F = make_linear(Wf, Eigen::VectorXd::Zero(1));

  Eigen::MatrixXd Wg = Eigen::MatrixXd::Zero(std::max(L0, 1), L0 + 1);
  for (int l = 0; l < L0; ++l) {
    Wg(l, l) = -params.alpha[l];
    Wg(l, L0) = params.beta[l];
  }
  sur.G = make_linear(Wg, Eigen::VectorXd::Zero(std::max(L0, 1)));
  return sur;
}

RnnOutput rnn_forward(const SurrogatePair& sur, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, double dt) {
  if (b.size() != c.size()) throw std::invalid_argument("rnn: b and c length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("rnn: dt must be positive");
  Trajectory tmp;
  tmp.dt = dt;
  tmp.b = b;
  tmp.c = c;
  tmp.sigma = Eigen::VectorXd::Zero(b.size());
  BatchForward fwd;
  rnn_batch_forward(sur, {&tmp}, dt, /*keep_cache=*/false, fwd);

  RnnOutput out;
  out.sigma = fwd.sigma_hat.col(0);
  out.xi.resize(b.size(), sur.L0);
  out.xi_rate.resize(b.size(), sur.L0);
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    out.xi.row(k) = fwd.xi_hat[k].col(0).transpose();
    out.xi_rate.row(k) = fwd.rate_hat[k].col(0).head(sur.L0).transpose();
  }
  return out;
}

double loss_accessible(const std::vector<Eigen::VectorXd>& pred,
                       const std::vector<Eigen::VectorXd>& truth, double dt, int* skipped) {
  if (pred.size() != truth.size()) throw std::invalid_argument("loss: batch size mismatch");
  double total = 0.0;
  int valid = 0, skip = 0;
  for (size_t n = 0; n < pred.size(); ++n) {
    if (pred[n].size() != truth[n].size()) throw std::invalid_argument("loss: shape mismatch");
    const double ref = l2_norm(truth[n], dt);
    if (ref == 0.0) {
      ++skip;
      continue;
    }
    total += l2_norm((pred[n] - truth[n]).eval(), dt) / ref;
    ++valid;
  }
  if (skipped != nullptr) *skipped += skip;
  return valid > 0 ? total / valid : 0.0;
}

double loss_inaccessible(const std::vector<Eigen::VectorXd>& pred_sigma,
                         const std::vector<Eigen::VectorXd>& true_sigma,
                         const std::vector<Eigen::MatrixXd>& pred_xi_rate,
                         const std::vector<Eigen::MatrixXd>& true_xi_rate, double dt,
                         int* skipped) {
  if (pred_sigma.size() != true_sigma.size() || pred_xi_rate.size() != true_xi_rate.size() ||
      pred_sigma.size() != pred_xi_rate.size()) {
    throw std::invalid_argument("loss: batch size mismatch");
  }
  double total = 0.0;
  int valid = 0, skip = 0;
  for (size_t n = 0; n < pred_sigma.size(); ++n) {
    const double sig_ref = l2_norm(true_sigma[n], dt);
    const double xi_ref = l2_norm(true_xi_rate[n], dt);
    if (sig_ref == 0.0 || xi_ref == 0.0) {
      ++skip;
      continue;
    }
    total += l2_norm((pred_sigma[n] - true_sigma[n]).eval(), dt) / sig_ref +
             l2_norm((pred_xi_rate[n] - true_xi_rate[n]).eval(), dt) / xi_ref;
    ++valid;
  }
  if (skipped != nullptr) *skipped += skip;
  return valid > 0 ? total / valid : 0.0;
}

double evaluate_loss(const SurrogatePair& sur, const std::vector<const Trajectory*>& trajs,
                     double dt, LossKind kind, int* skipped) {
  if (trajs.empty()) return 0.0;
  BatchForward fwd;
  rnn_batch_forward(sur, trajs, dt, /*keep_cache=*/false, fwd);
  const BatchLoss loss =
      compute_batch_loss(trajs, dt, kind, /*xi_rate_term=*/true, fwd, /*want_grad=*/false);
  if (skipped != nullptr) *skipped += loss.skipped;
  return loss.value;
}

double loss_and_gradient(const SurrogatePair& sur, const std::vector<const Trajectory*>& batch,
                         double dt, LossKind kind, bool xi_rate_term, SurrogatePair& grad) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  BatchForward fwd;
  rnn_batch_forward(sur, batch, dt, /*keep_cache=*/true, fwd);
  const BatchLoss loss = compute_batch_loss(batch, dt, kind, xi_rate_term, fwd,
                                            /*want_grad=*/true);
  Grads gF = Grads::zero_like(sur.F);
  Grads gG = Grads::zero_like(sur.G);
  if (loss.valid > 0) {
    rnn_batch_backward(sur, dt, fwd, loss, kind, xi_rate_term, gF, gG);
  }
  grad = sur;
  grad.F.W = std::move(gF.W);
  grad.F.bias = std::move(gF.b);
  grad.G.W = std::move(gG.W);
  grad.G.bias = std::move(gG.b);
  return loss.value;
}

TrainResult train(const Dataset& data, SurrogatePair sur, const TrainConfig& cfg) {
  if (data.trajectories.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0) {
    throw std::invalid_argument("train: batch size and epoch count must be positive");
  }
  const double dt = data.dt;

  // Seeded 80/20 split by trajectory.
  const int N = static_cast<int>(data.trajectories.size());
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_test = std::min(N - 1, static_cast<int>(std::lround(cfg.test_fraction * N)));
  std::vector<const Trajectory*> test_set, train_set;
  for (int i = 0; i < N; ++i) {
    const Trajectory* tr = &data.trajectories[order[i]];
    (i < n_test ? test_set : train_set).push_back(tr);
  }
  std::sort(train_set.begin(), train_set.end());
  std::sort(test_set.begin(), test_set.end());

  TrainResult result;
  result.surrogate = std::move(sur);

  Grads gF = Grads::zero_like(result.surrogate.F);
  Grads gG = Grads::zero_like(result.surrogate.G);
  Adam adam(result.surrogate.F, result.surrogate.G);

  auto record = [&](int epoch, double train_loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    rec.test_accessible = evaluate_loss(result.surrogate, test_set, dt, LossKind::Accessible);
    rec.test_train_kind = cfg.loss == LossKind::Accessible
                              ? rec.test_accessible
                              : evaluate_loss(result.surrogate, test_set, dt, cfg.loss);
    result.history.push_back(rec);
  };

  // Epoch 0: losses of the initial surrogate, no update.
  record(0, evaluate_loss(result.surrogate, train_set, dt, cfg.loss,
                          &result.skipped_zero_norm));

  std::vector<size_t> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  BatchForward fwd;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double epoch_loss = 0.0;
    int epoch_count = 0;
    const size_t bsz = static_cast<size_t>(cfg.batch_size);
    for (size_t start = 0; start < idx.size(); start += bsz) {
      std::vector<const Trajectory*> batch;
      for (size_t i = start; i < std::min(idx.size(), start + bsz); ++i) {
        batch.push_back(train_set[idx[i]]);
      }
      rnn_batch_forward(result.surrogate, batch, dt, /*keep_cache=*/true, fwd);
      BatchLoss loss = compute_batch_loss(batch, dt, cfg.loss, cfg.xi_rate_term, fwd,
                                          /*want_grad=*/true);
      result.skipped_zero_norm += loss.skipped;
      if (!std::isfinite(loss.value)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            "; reduce the learning rate or check the data scaling");
      }
      if (loss.valid == 0) continue;
      gF.set_zero();
      gG.set_zero();
      rnn_batch_backward(result.surrogate, dt, fwd, loss, cfg.loss, cfg.xi_rate_term, gF, gG);
      adam.step(result.surrogate, gF, gG, cfg);
      epoch_loss += loss.value * loss.valid;
      epoch_count += loss.valid;
    }
    record(epoch, epoch_count > 0 ? epoch_loss / epoch_count : 0.0);
  }
  return result;
}

ProbeGrids default_probe_grids(double xi_range) {
  ProbeGrids g;
  g.b_grid = linspace(-0.5, 0.5, 41);
  g.c_grid = linspace(-2.0, 2.0, 41);
  g.xi_grid = linspace(-xi_range, xi_range, 41);
  g.b_fixed = linspace(-0.5, 0.5, 5);
  g.c_fixed = linspace(-2.0, 2.0, 5);
  g.xi_fixed = linspace(-xi_range, xi_range, 5);
  return g;
}

std::vector<ProbeCurve> linearity_probe(const SurrogatePair& sur, const ProbeGrids& grids) {
  const int L0 = sur.L0;
  std::vector<ProbeCurve> curves;

  auto stress_at = [&](double b, double c, double xi_scalar) {
    Eigen::VectorXd x(sur.f_input_dim());
    x[0] = b;
    if (sur.use_strain_rate) x[1] = c;
    x.tail(L0).setConstant(xi_scalar);
    return mlp_forward(sur.F, x)[0];
  };
  auto rate_sum_at = [&](double xi_scalar, double b) {
    Eigen::VectorXd x(L0 + 1);
    x.head(L0).setConstant(xi_scalar);
    x[L0] = b;
    return mlp_forward(sur.G, x).head(L0).sum();
  };
  auto add_curve = [&](const std::string& family, double fixed, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
    curves.push_back({family, fixed, x, y, fit_r2(x, y)});
  };

  Eigen::VectorXd y;
  for (Eigen::Index i = 0; i < grids.c_fixed.size(); ++i) {
    y.resize(grids.b_grid.size());
    for (Eigen::Index j = 0; j < grids.b_grid.size(); ++j)
      y[j] = stress_at(grids.b_grid[j], grids.c_fixed[i], 0.0);
    add_curve("sigma_vs_b", grids.c_fixed[i], grids.b_grid, y);
  }
  for (Eigen::Index i = 0; i < grids.b_fixed.size(); ++i) {
    y.resize(grids.c_grid.size());
    for (Eigen::Index j = 0; j < grids.c_grid.size(); ++j)
      y[j] = stress_at(grids.b_fixed[i], grids.c_grid[j], 0.0);
    add_curve("sigma_vs_c", grids.b_fixed[i], grids.c_grid, y);
  }
  for (Eigen::Index i = 0; i < grids.b_fixed.size(); ++i) {
    y.resize(grids.xi_grid.size());
    for (Eigen::Index j = 0; j < grids.xi_grid.size(); ++j)
      y[j] = stress_at(grids.b_fixed[i], 0.0, grids.xi_grid[j]);
    add_curve("sigma_vs_xi", grids.b_fixed[i], grids.xi_grid, y);
  }
  for (Eigen::Index i = 0; i < grids.xi_fixed.size(); ++i) {
    y.resize(grids.b_grid.size());
    for (Eigen::Index j = 0; j < grids.b_grid.size(); ++j)
      y[j] = rate_sum_at(grids.xi_fixed[i], grids.b_grid[j]);
    add_curve("xirate_vs_b", grids.xi_fixed[i], grids.b_grid, y);
  }
  for (Eigen::Index i = 0; i < grids.b_fixed.size(); ++i) {
    y.resize(grids.xi_grid.size());
    for (Eigen::Index j = 0; j < grids.xi_grid.size(); ++j)
      y[j] = rate_sum_at(grids.xi_grid[j], grids.b_fixed[i]);
    add_curve("xirate_vs_xi", grids.b_fixed[i], grids.xi_grid, y);
  }
  return curves;
}

double SurrogateModel::stress(double b, double c, const Vec& xi) const {
  Eigen::VectorXd x(sur_.f_input_dim());
  x[0] = b;
  if (sur_.use_strain_rate) x[1] = c;
  x.tail(sur_.L0) = xi;
  return mlp_forward(sur_.F, x)[0];
}

Vec SurrogateModel::xi_rate(const Vec& xi, double b) const {
  Eigen::VectorXd x(sur_.L0 + 1);
  x.head(sur_.L0) = xi;
  x[sur_.L0] = b;
  return mlp_forward(sur_.G, x).head(sur_.L0);
}

Vec SurrogateModel::stress_batch(const Vec& b, const Vec& c, const Mat& xi) const {
  Eigen::MatrixXd X(sur_.f_input_dim(), b.size());
  X.row(0) = b.transpose();
  if (sur_.use_strain_rate) X.row(1) = c.transpose();
  X.bottomRows(sur_.L0) = xi;
  return mlp_forward_batch(sur_.F, X).row(0).transpose();
}

Mat SurrogateModel::xi_rate_batch(const Mat& xi, const Vec& b) const {
  Eigen::MatrixXd X(sur_.L0 + 1, b.size());
  X.topRows(sur_.L0) = xi;
  X.row(sur_.L0) = b.transpose();
  return mlp_forward_batch(sur_.G, X).topRows(sur_.L0);
}

}  // namespace visco
