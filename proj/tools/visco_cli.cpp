// visco: command-line front end for the 1-D viscoelastic homogenization
// toolkit. Every command is a pure function of (config, seed); outputs are
// CSV (binary only for network weights) plus a resolved-config echo.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "visco/constitutive.hpp"
#include "visco/datagen.hpp"
#include "visco/errors.hpp"
#include "visco/homogenize.hpp"
#include "visco/io.hpp"
#include "visco/macrosolver.hpp"
#include "visco/material.hpp"
#include "visco/microsolver.hpp"
#include "visco/nn.hpp"

namespace fs = std::filesystem;
using namespace visco;

namespace {

struct Global {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, char sep) {
  std::vector<double> out;
  for (const std::string& tok : split(s, sep)) out.push_back(std::stod(tok));
  return out;
}

// ---- material ---------------------------------------------------------------

MaterialProfile material_from_config(const ConfigDoc& cfg) {
  const std::string preset = cfg.get_str("material", "preset", "");
  if (preset == "golden2") {
    return MaterialProfile::piecewise_kv({{0.5, 1.0, 0.1}, {0.5, 3.0, 0.2}});
  }
  if (preset == "inertial") {
    // same stiffnesses, second-layer viscosity raised to 2 (stronger inertial
    // effects; homogenized accuracy intentionally degrades)
    return MaterialProfile::piecewise_kv({{0.5, 1.0, 0.1}, {0.5, 3.0, 2.0}});
  }
  if (preset == "tanh") {
    return MaterialProfile::analytic_kv(
        [](double y) { return 2.0 + std::tanh((y - 0.5) / 0.2); },
        [](double y) { return 0.5 + 0.1 * std::tanh((y - 0.5) / 0.2); });
  }
  if (preset == "sls2") {
    return MaterialProfile::piecewise_sls({{0.5, 1.0, 1.0, 0.1}, {0.5, 3.0, 3.0, 0.2}});
  }
  if (!preset.empty()) throw ConfigError("material.preset: unknown preset '" + preset + "'");

  const std::string kind = cfg.get_str("material", "kind", "piecewise-kv");
  const std::string spec = cfg.require_str("material", "layers");
  if (kind == "piecewise-kv") {
    std::vector<KvLayer> layers;
    for (const std::string& piece : split(spec, ';')) {
      const std::vector<double> v = parse_doubles(piece, ':');
      if (v.size() != 3) throw ConfigError("material.layers: expected len:E:nu per piece");
      layers.push_back({v[0], v[1], v[2]});
    }
    return MaterialProfile::piecewise_kv(layers);
  }
  if (kind == "piecewise-sls") {
    std::vector<SlsLayer> layers;
    for (const std::string& piece : split(spec, ';')) {
      const std::vector<double> v = parse_doubles(piece, ':');
      if (v.size() != 4) throw ConfigError("material.layers: expected len:E1:E2:nu per piece");
      layers.push_back({v[0], v[1], v[2], v[3]});
    }
    return MaterialProfile::piecewise_sls(layers);
  }
  throw ConfigError("material.kind: unknown kind '" + kind + "'");
}

// Analytic profiles are homogenized through a midpoint piecewise approximation.
MaterialProfile as_piecewise(const MaterialProfile& m, const ConfigDoc& cfg) {
  if (m.kind() != ProfileKind::AnalyticKV) return m;
  const int pieces = static_cast<int>(cfg.get_int("material", "pieces", 64));
  return m.piecewise_approximate(pieces);
}

// ---- resolved-config echo ----------------------------------------------------

void echo_config(ConfigDoc resolved, const Global& g, const std::string& command) {
  resolved.set("run", "command", command);
  resolved.set("run", "seed", std::to_string(g.seed));
  resolved.set("run", "jobs", std::to_string(g.jobs));
  std::ofstream f(fs::path(g.out_dir) / "resolved_config.toml");
  f << resolved.dump();
}

ConfigDoc load_config(const Global& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required");
  if (!fs::exists(g.config_path)) throw ConfigError("config file not found: " + g.config_path);
  return ConfigDoc::parse_file(g.config_path);
}

// ---- forcing / boundary presets -----------------------------------------------

std::function<double(double)> boundary_from_config(const ConfigDoc& cfg, double T,
                                                   std::uint64_t seed) {
  const std::string kind = cfg.get_str("simulate", "forcing", "none");
  const double amp = cfg.get_double("simulate", "forcing_amplitude", 0.1);
  if (kind == "none") return {};
  if (kind == "sinusoidal") {
    return [amp](double t) { return amp * std::sin(2.0 * M_PI * t); };
  }
  if (kind == "brownian") {
    // Integrated Brownian motion on a fixed fine grid, normalized so the
    // path RMS at time T matches the sinusoidal amplitude scale:
    // E[(a * int_0^T W)^2] = a^2 T^3/3 = amp^2.
    const double grid_dt = 1e-4;
    const int n = static_cast<int>(std::ceil(T / grid_dt)) + 2;
    auto path = std::make_shared<std::vector<double>>(n, 0.0);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, std::sqrt(grid_dt));
    const double a = amp / std::sqrt(T * T * T / 3.0);
    double w = 0.0, ib = 0.0;
    for (int i = 1; i < n; ++i) {
      ib += w * grid_dt;
      w += gauss(rng);
      (*path)[i] = a * ib;
    }
    return [path, grid_dt](double t) {
      const double s = t / grid_dt;
      const int i = std::min(static_cast<int>(path->size()) - 2,
                             std::max(0, static_cast<int>(std::floor(s))));
      const double frac = s - i;
      return (1.0 - frac) * (*path)[i] + frac * (*path)[i + 1];
    };
  }
  throw ConfigError("simulate.forcing: unknown kind '" + kind + "'");
}

SimConfig sim_from_config(const ConfigDoc& cfg, std::uint64_t seed) {
  SimConfig sim;
  sim.domain_length = cfg.get_double("simulate", "domain_length", 1.0);
  sim.epsilon = cfg.get_double("simulate", "epsilon", 0.04);
  sim.h = cfg.get_double("simulate", "h", 0.005);
  sim.dt = cfg.get_double("simulate", "dt", 0.1 * sim.h * sim.h);
  sim.T = cfg.get_double("simulate", "T", 4.0);
  sim.rho = cfg.get_double("simulate", "rho", 1.0);
  sim.store_stride = static_cast<int>(cfg.get_int("simulate", "store_stride", 1));
  sim.boundary_b = boundary_from_config(cfg, sim.T, seed);
  const double f = cfg.get_double("simulate", "body_force", 0.0);
  if (f != 0.0) sim.forcing = [f](double, double) { return f; };
  return sim;
}

// ---- commands -----------------------------------------------------------------

int cmd_homogenize(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const MaterialProfile raw = material_from_config(cfg);
  const MaterialProfile m = as_piecewise(raw, cfg);
  const HomogenizedParams p =
      m.kind() == ProfileKind::PiecewiseSLS ? sls_exact_params(m) : kv_exact_params(m);
  const double resid = reconstruction_residual(p, m);

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "homogenize");
  std::ofstream f(fs::path(g.out_dir) / "params.csv");
  f << "name,value\n";
  f << "model," << (p.model == ModelKind::KV ? "kv" : "sls") << "\n";
  f << "E_prime," << fmt_double(p.E_prime) << "\n";
  f << "nu_prime," << fmt_double(p.nu_prime) << "\n";
  for (size_t i = 0; i < p.alpha.size(); ++i) {
    f << "alpha_" << i + 1 << "," << fmt_double(p.alpha[i]) << "\n";
    f << "beta_" << i + 1 << "," << fmt_double(p.beta[i]) << "\n";
  }
  f << "reconstruction_residual," << fmt_double(resid) << "\n";

  std::cout << "E' = " << p.E_prime << ", nu' = " << p.nu_prime << ", L0 = " << p.dim()
            << ", reconstruction residual = " << resid << "\n";
  return 0;
}

Labeler labeler_from_string(const std::string& s) {
  if (s == "analytic") return Labeler::Analytic2Piece;
  if (s == "cell-fd") return Labeler::CellFD;
  throw ConfigError("data.labeler: expected 'analytic' or 'cell-fd'");
}

int cmd_gen_data(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const MaterialProfile m = material_from_config(cfg);

  const int n = static_cast<int>(cfg.get_int("data", "n", 40));
  const double dt = cfg.get_double("data", "dt", 0.004);
  const double T = cfg.get_double("data", "T", 4.0);
  const double fine_dt = cfg.get_double("data", "fine_dt", 0.001);
  const int cell_nodes = static_cast<int>(cfg.get_int("data", "cell_nodes", 200));
  const Labeler labeler = labeler_from_string(cfg.get_str("data", "labeler", "analytic"));

  MuConfig mu;
  mu.T = T;
  mu.n_pieces = static_cast<int>(cfg.get_int("data", "mu_pieces", 10));
  mu.step_scale = cfg.get_double("data", "mu_step_scale", 1.0);
  mu.seed = g.seed_set ? g.seed : static_cast<std::uint64_t>(cfg.get_int("data", "seed", 0));

  const MaterialProfile labeled =
      labeler == Labeler::CellFD ? m : as_piecewise(m, cfg);
  const Dataset data = build_dataset(labeled, n, dt, T, mu, labeler, fine_dt, cell_nodes);

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "gen-data");
  write_dataset((fs::path(g.out_dir) / "dataset").string(), data);
  std::cout << "wrote " << data.trajectories.size() << " trajectories (dt = " << data.dt
            << ", steps = " << data.length << ")\n";
  return 0;
}

// Named training protocols (dataset sizes live in gen-data configs): A trains
// with the inaccessible loss, B chains inaccessible -> accessible, C uses the
// accessible loss only, D is the continuous-material variant of C.
void apply_protocol_defaults(const std::string& proto, TrainConfig& cfg, int& phase2_epochs) {
  if (proto == "A") {
    cfg.loss = LossKind::Inaccessible;
  } else if (proto == "B") {
    cfg.loss = LossKind::Inaccessible;
    if (phase2_epochs == 0) phase2_epochs = cfg.epochs;
  } else if (proto == "C" || proto == "D") {
    cfg.loss = LossKind::Accessible;
  } else if (proto != "custom") {
    throw ConfigError("train.protocol: expected A, B, C, D or custom");
  }
}

int cmd_train(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const std::string dataset_dir = cfg.require_str("train", "dataset");
  const Dataset data = read_dataset(dataset_dir);

  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.get_int("train", "epochs", 150));
  tc.batch_size = static_cast<int>(cfg.get_int("train", "batch", 10));
  tc.learning_rate = cfg.get_double("train", "lr", 1e-3);
  tc.seed = g.seed_set ? g.seed : static_cast<std::uint64_t>(cfg.get_int("train", "seed", 0));
  tc.xi_rate_term = cfg.get_bool("train", "xi_rate_term", true);
  tc.test_fraction = cfg.get_double("train", "test_fraction", 0.2);
  int phase2_epochs = static_cast<int>(cfg.get_int("train", "phase2_epochs", 0));
  apply_protocol_defaults(cfg.get_str("train", "protocol", "custom"), tc, phase2_epochs);
  const std::string loss_str = cfg.get_str("train", "loss", "");
  if (loss_str == "accessible") tc.loss = LossKind::Accessible;
  if (loss_str == "inaccessible") tc.loss = LossKind::Inaccessible;

  const int l0 = static_cast<int>(cfg.get_int("train", "l0", 1));
  const bool use_c = cfg.get_bool("train", "use_strain_rate", true);
  std::vector<int> hidden;
  for (double v : parse_doubles(cfg.get_str("train", "hidden", "100,100,100"), ','))
    hidden.push_back(static_cast<int>(v));

  SurrogatePair sur;
  const std::string init = cfg.get_str("train", "init", "random");
  if (init == "random") {
    std::mt19937_64 rng(tc.seed + 1);
    sur = make_surrogate(l0, use_c, rng, hidden);
  } else if (init == "exact-linear") {
    sur = exact_linear_surrogate(kv_exact_params(material_from_config(cfg)));
  } else {
    sur = read_surrogate(init);  // warm start / phase chaining
  }

  TrainResult res = train(data, std::move(sur), tc);
  std::vector<EpochRecord> history = res.history;
  if (phase2_epochs > 0) {  // protocol B: continue from phase-1 weights
    TrainConfig tc2 = tc;
    tc2.epochs = phase2_epochs;
    tc2.loss = LossKind::Accessible;
    tc2.seed = tc.seed + 1;
    TrainResult res2 = train(data, std::move(res.surrogate), tc2);
    for (EpochRecord r : res2.history) {
      r.epoch += tc.epochs;
      history.push_back(r);
    }
    res.surrogate = std::move(res2.surrogate);
  }

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "train");
  write_surrogate((fs::path(g.out_dir) / "weights.bin").string(), res.surrogate);
  write_loss_history_csv((fs::path(g.out_dir) / "loss_history.csv").string(), history);
  std::cout << "final train loss " << history.back().train_loss << ", test accessible "
            << history.back().test_accessible << "\n";
  return 0;
}

int cmd_simulate(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const std::uint64_t seed =
      g.seed_set ? g.seed : static_cast<std::uint64_t>(cfg.get_int("simulate", "seed", 0));
  const SimConfig sim = sim_from_config(cfg, seed);
  const std::string backend = cfg.get_str("simulate", "backend", "fem");

  SimResult res;
  if (backend == "fem") {
    res = solve_multiscale_fem(material_from_config(cfg), sim);
  } else if (backend == "macro-analytic") {
    const MaterialProfile m = as_piecewise(material_from_config(cfg), cfg);
    const HomogenizedParams p =
        m.kind() == ProfileKind::PiecewiseSLS ? sls_exact_params(m) : kv_exact_params(m);
    res = solve_macro(AnalyticModel(p), sim);
  } else if (backend == "macro-surrogate") {
    const SurrogateModel model(read_surrogate(cfg.require_str("simulate", "weights")));
    res = solve_macro(model, sim);
  } else {
    throw ConfigError("simulate.backend: expected fem, macro-analytic or macro-surrogate");
  }

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "simulate");
  write_sim_result_csv((fs::path(g.out_dir) / "result.csv").string(), res);
  std::cout << "wrote " << res.times.size() << " snapshots of " << res.nodes.size()
            << " nodes (dt = " << res.dt << ")\n";
  return 0;
}

int cmd_compare(const Global& g, std::string ref_path, std::string test_path) {
  const ConfigDoc cfg = load_config(g);
  if (ref_path.empty()) ref_path = cfg.require_str("compare", "ref");
  if (test_path.empty()) test_path = cfg.require_str("compare", "test");

  const SimResult ref = read_sim_result_csv(ref_path);
  const SimResult test = read_sim_result_csv(test_path);
  const ErrorCurve ec = relative_error(ref, test);

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "compare");
  write_error_curve_csv((fs::path(g.out_dir) / "error.csv").string(), ec);

  double mean = 0.0;
  for (double e : ec.e) mean += e;
  mean /= static_cast<double>(ec.e.size());
  const double peak = ec.max_on(ec.times.front(), ec.times.back());
  std::ofstream f(fs::path(g.out_dir) / "summary.txt");
  f << "max_e " << fmt_double(peak) << "\nmean_e " << fmt_double(mean) << "\n";
  std::cout << "max e(t) = " << peak << ", mean e(t) = " << mean << "\n";
  return 0;
}

int cmd_dt_robustness(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const std::vector<std::string> weight_files = split(cfg.require_str("dt", "weights"), ',');
  const std::vector<double> dts = parse_doubles(cfg.get_str("dt", "dts", "0.002,0.004,0.008,0.016"), ',');
  if (dts.empty()) throw ConfigError("dt.dts: at least one dt required");

  const MaterialProfile m = material_from_config(cfg);
  const int n = static_cast<int>(cfg.get_int("dt", "n", 20));
  const double T = cfg.get_double("dt", "T", 4.0);
  MuConfig mu;
  mu.T = T;
  mu.seed = g.seed_set ? g.seed : static_cast<std::uint64_t>(cfg.get_int("dt", "seed", 0));

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "dt-robustness");
  std::ofstream f(fs::path(g.out_dir) / "dt_robustness.csv");
  f << "model,dt,accessible_loss\n";
  for (double dt : dts) {
    const Dataset eval = build_dataset(m, n, dt, T, mu, Labeler::Analytic2Piece);
    std::vector<const Trajectory*> all;
    for (const auto& tr : eval.trajectories) all.push_back(&tr);
    for (const std::string& wf : weight_files) {
      const SurrogatePair sur = read_surrogate(wf);
      const double loss = evaluate_loss(sur, all, dt, LossKind::Accessible);
      f << wf << "," << fmt_double(dt) << "," << fmt_double(loss) << "\n";
    }
  }
  std::cout << "wrote dt_robustness.csv for " << weight_files.size() << " model(s), "
            << dts.size() << " dt value(s)\n";
  return 0;
}

int cmd_probe_linearity(const Global& g) {
  const ConfigDoc cfg = load_config(g);
  const std::string weights = cfg.require_str("probe", "weights");
  SurrogatePair sur;
  if (weights == "exact-linear") {
    sur = exact_linear_surrogate(kv_exact_params(as_piecewise(material_from_config(cfg), cfg)));
  } else {
    sur = read_surrogate(weights);
  }
  const double xi_range = cfg.get_double("probe", "xi_range", 0.1);
  const auto curves = linearity_probe(sur, default_probe_grids(xi_range));

  fs::create_directories(g.out_dir);
  echo_config(cfg, g, "probe-linearity");
  write_probe_curves((fs::path(g.out_dir) / "probe").string(), curves);
  double worst = 1.0;
  for (const auto& c : curves) worst = std::min(worst, c.r2);
  std::cout << "wrote " << curves.size() << " curves, min R^2 = " << worst << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-D viscoelastic homogenization toolkit"};
  app.require_subcommand(1);

  Global g;
  app.add_option("--config", g.config_path, "TOML-style config file")->required(false);
  app.add_option("--out", g.out_dir, "output directory (default: out)");
  auto* seed_opt = app.add_option("--seed", g.seed, "override all config seeds");
  app.add_option("--jobs", g.jobs, "worker cap (commands are single-threaded)")
      ->check(CLI::PositiveNumber);

  auto* homogenize = app.add_subcommand("homogenize", "pole/residue decomposition + report");
  auto* gen_data = app.add_subcommand("gen-data", "sample strain signals and label a dataset");
  auto* train_cmd = app.add_subcommand("train", "train the recurrent surrogate");
  auto* simulate = app.add_subcommand("simulate", "fine-scale FEM or homogenized macro run");
  auto* compare = app.add_subcommand("compare", "relative error curve between two results");
  auto* dt_rob = app.add_subcommand("dt-robustness", "evaluate weights across time steps");
  auto* probe = app.add_subcommand("probe-linearity", "linearity probe curve families + R^2");

  std::string ref_path, test_path;
  compare->add_option("--ref", ref_path, "reference result CSV (overrides config)");
  compare->add_option("--test", test_path, "test result CSV (overrides config)");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (homogenize->parsed()) return cmd_homogenize(g);
    if (gen_data->parsed()) return cmd_gen_data(g);
    if (train_cmd->parsed()) return cmd_train(g);
    if (simulate->parsed()) return cmd_simulate(g);
    if (compare->parsed()) return cmd_compare(g, ref_path, test_path);
    if (dt_rob->parsed()) return cmd_dt_robustness(g);
    if (probe->parsed()) return cmd_probe_linearity(g);
  } catch (const ConfigError& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return 1;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 2;
  } catch (const DecompositionError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
