#include "visco/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "visco/errors.hpp"

namespace visco {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("io: cannot open for reading: " + path);
  return in;
}

std::vector<double> split_doubles(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

void put_net(std::ostream& out, const MLPParams& net) {
  put_u32(out, static_cast<std::uint32_t>(net.n_layers()));
  put_u32(out, static_cast<std::uint32_t>(net.in_dim()));
  for (int l = 0; l < net.n_layers(); ++l) {
    put_u32(out, static_cast<std::uint32_t>(net.W[l].rows()));
  }
}

void get_net_header(std::istream& in, std::vector<int>& sizes) {
  const int n_layers = static_cast<int>(get_u32(in));
  sizes.clear();
  sizes.push_back(static_cast<int>(get_u32(in)));
  for (int l = 0; l < n_layers; ++l) sizes.push_back(static_cast<int>(get_u32(in)));
}

void put_net_body(std::ostream& out, const MLPParams& net) {
  for (int l = 0; l < net.n_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.W[l].rows(); ++i)
      for (Eigen::Index j = 0; j < net.W[l].cols(); ++j) put_f64(out, net.W[l](i, j));
    for (Eigen::Index i = 0; i < net.bias[l].size(); ++i) put_f64(out, net.bias[l][i]);
  }
}

MLPParams get_net_body(std::istream& in, const std::vector<int>& sizes) {
  MLPParams net;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    Eigen::MatrixXd W(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = get_f64(in);
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = get_f64(in);
    net.W.push_back(std::move(W));
    net.bias.push_back(std::move(b));
  }
  return net;
}

}  // namespace

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_sim_result_csv(const std::string& path, const SimResult& res) {
  auto out = open_out(path);
  out << "# h=" << fmt_double(res.h) << "\n# dt=" << fmt_double(res.dt)
      << "\n# rho=" << fmt_double(res.rho) << "\n# epsilon=" << fmt_double(res.epsilon) << "\n";
  out << "t";
  for (double x : res.nodes) out << ",u@" << fmt_double(x);
  out << "\n";
  for (size_t i = 0; i < res.times.size(); ++i) {
    out << fmt_double(res.times[i]);
    for (Eigen::Index k = 0; k < res.displacement.cols(); ++k) {
      out << ',' << fmt_double(res.displacement(static_cast<Eigen::Index>(i), k));
    }
    out << "\n";
  }
}

SimResult read_sim_result_csv(const std::string& path) {
  auto in = open_in(path);
  SimResult res;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const double val = std::stod(line.substr(eq + 1));
      if (key == "h") res.h = val;
      else if (key == "dt") res.dt = val;
      else if (key == "rho") res.rho = val;
      else if (key == "epsilon") res.epsilon = val;
      continue;
    }
    if (!header_seen) {
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // "t"
      while (std::getline(ss, cell, ',')) {
        if (cell.rfind("u@", 0) != 0) throw std::runtime_error("io: bad result header: " + path);
        res.nodes.push_back(std::stod(cell.substr(2)));
      }
      header_seen = true;
      continue;
    }
    rows.push_back(split_doubles(line));
  }
  if (!header_seen) throw std::runtime_error("io: missing header in " + path);
  const Eigen::Index n = static_cast<Eigen::Index>(res.nodes.size());
  res.displacement.resize(static_cast<Eigen::Index>(rows.size()), n);
  res.velocity = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n + 1) {
      throw std::runtime_error("io: ragged row in " + path);
    }
    res.times.push_back(rows[i][0]);
    for (Eigen::Index k = 0; k < n; ++k) {
      res.displacement(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<size_t>(k) + 1];
    }
  }
  return res;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  auto out = open_out(path);
  const int L = tr.has_xi ? static_cast<int>(tr.xi.cols()) : 0;
  out << "t,b,c,sigma";
  for (int l = 1; l <= L; ++l) out << ",xi_" << l;
  for (int l = 1; l <= L; ++l) out << ",xidot_" << l;
  out << "\n";
  for (Eigen::Index k = 0; k < tr.steps(); ++k) {
    out << fmt_double(k * tr.dt) << ',' << fmt_double(tr.b[k]) << ',' << fmt_double(tr.c[k])
        << ',' << fmt_double(tr.sigma[k]);
    for (int l = 0; l < L; ++l) out << ',' << fmt_double(tr.xi(k, l));
    for (int l = 0; l < L; ++l) out << ',' << fmt_double(tr.xi_rate(k, l));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty trajectory file " + path);
  int n_cols = 1;
  for (char ch : line) n_cols += (ch == ',');
  if (n_cols < 4 || (n_cols - 4) % 2 != 0) {
    throw std::runtime_error("io: bad trajectory header in " + path);
  }
  const int L = (n_cols - 4) / 2;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_doubles(line));
    if (static_cast<int>(rows.back().size()) != n_cols) {
      throw std::runtime_error("io: ragged row in " + path);
    }
  }
  Trajectory tr;
  const Eigen::Index K = static_cast<Eigen::Index>(rows.size());
  tr.b.resize(K);
  tr.c.resize(K);
  tr.sigma.resize(K);
  tr.has_xi = L > 0;
  if (tr.has_xi) {
    tr.xi.resize(K, L);
    tr.xi_rate.resize(K, L);
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& r = rows[static_cast<size_t>(k)];
    tr.b[k] = r[1];
    tr.c[k] = r[2];
    tr.sigma[k] = r[3];
    for (int l = 0; l < L; ++l) {
      tr.xi(k, l) = r[4 + static_cast<size_t>(l)];
      tr.xi_rate(k, l) = r[4 + static_cast<size_t>(L + l)];
    }
  }
  tr.dt = K >= 2 ? rows[1][0] - rows[0][0] : 0.0;
  return tr;
}

void write_error_curve_csv(const std::string& path, const ErrorCurve& curve) {
  auto out = open_out(path);
  out << "t,e\n";
  for (size_t i = 0; i < curve.times.size(); ++i) {
    out << fmt_double(curve.times[i]) << ',' << fmt_double(curve.e[i]) << "\n";
  }
}

void write_loss_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  auto out = open_out(path);
  out << "epoch,train_loss,test_accessible,test_train_kind\n";
  for (const auto& rec : history) {
    out << rec.epoch << ',' << fmt_double(rec.train_loss) << ','
        << fmt_double(rec.test_accessible) << ',' << fmt_double(rec.test_train_kind) << "\n";
  }
}

void write_probe_curves(const std::string& dir, const std::vector<ProbeCurve>& curves) {
  fs::create_directories(dir);
  std::map<std::string, std::vector<const ProbeCurve*>> by_family;
  for (const auto& c : curves) by_family[c.family].push_back(&c);
  for (const auto& [family, list] : by_family) {
    auto out = open_out((fs::path(dir) / (family + ".csv")).string());
    out << "fixed_value,x,y\n";
    for (const ProbeCurve* c : list) {
      for (Eigen::Index i = 0; i < c->x.size(); ++i) {
        out << fmt_double(c->fixed_value) << ',' << fmt_double(c->x[i]) << ','
            << fmt_double(c->y[i]) << "\n";
      }
    }
  }
  auto table = open_out((fs::path(dir) / "r2_table.csv").string());
  table << "family,fixed_value,r2\n";
  for (const auto& c : curves) {
    table << c.family << ',' << fmt_double(c.fixed_value) << ',' << fmt_double(c.r2) << "\n";
  }
}

void write_dataset(const std::string& dir, const Dataset& data) {
  fs::create_directories(dir);
  auto man = open_out((fs::path(dir) / "manifest.txt").string());
  const bool has_xi = !data.trajectories.empty() && data.trajectories.front().has_xi;
  const int L = has_xi ? static_cast<int>(data.trajectories.front().xi.cols()) : 0;
  man << "dt = " << fmt_double(data.dt) << "\n"
      << "length = " << data.length << "\n"
      << "n = " << data.trajectories.size() << "\n"
      << "channels = " << (has_xi ? "b,c,sigma,xi,xidot" : "b,c,sigma") << "\n"
      << "hidden_dim = " << L << "\n"
      << "profile_digest = " << data.profile_digest << "\n"
      << "generator = " << data.generator << "\n"
      << "seed = " << data.seed << "\n";
  for (size_t i = 0; i < data.trajectories.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%04zu.csv", i);
    write_trajectory_csv((fs::path(dir) / name).string(), data.trajectories[i]);
  }
}

Dataset read_dataset(const std::string& dir) {
  auto man = open_in((fs::path(dir) / "manifest.txt").string());
  Dataset data;
  std::string line;
  size_t n = 0;
  while (std::getline(man, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "dt") data.dt = std::stod(val);
    else if (key == "length") data.length = std::stol(val);
    else if (key == "n") n = std::stoul(val);
    else if (key == "profile_digest") data.profile_digest = val;
    else if (key == "generator") data.generator = val;
    else if (key == "seed") data.seed = std::stoull(val);
  }
  for (size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%04zu.csv", i);
    Trajectory tr = read_trajectory_csv((fs::path(dir) / name).string());
    tr.dt = data.dt;  // exact value from the manifest, not the time column
    if (tr.steps() != data.length) throw std::runtime_error("io: trajectory length mismatch");
    data.trajectories.push_back(std::move(tr));
  }
  return data;
}

void write_surrogate(const std::string& path, const SurrogatePair& sur) {
  auto out = open_out(path, std::ios::binary);
  out.write("VSRW", 4);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(sur.L0));
  put_u32(out, sur.use_strain_rate ? 1 : 0);
  put_net(out, sur.F);
  put_net(out, sur.G);
  put_net_body(out, sur.F);
  put_net_body(out, sur.G);
  if (!out) throw std::runtime_error("io: failed writing " + path);
}

SurrogatePair read_surrogate(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::strncmp(magic, "VSRW", 4) != 0) {
    throw std::runtime_error("io: not a surrogate weights file: " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw std::runtime_error("io: unsupported weights version");
  SurrogatePair sur;
  sur.L0 = static_cast<int>(get_u32(in));
  sur.use_strain_rate = get_u32(in) != 0;
  std::vector<int> f_sizes, g_sizes;
  get_net_header(in, f_sizes);
  get_net_header(in, g_sizes);
  sur.F = get_net_body(in, f_sizes);
  sur.G = get_net_body(in, g_sizes);
  if (!in) throw std::runtime_error("io: truncated weights file: " + path);
  if (sur.F.in_dim() != sur.f_input_dim() || sur.G.in_dim() != sur.g_input_dim()) {
    throw std::runtime_error("io: weights dimensions inconsistent with header");
  }
  return sur;
}

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

ConfigDoc ConfigDoc::parse_text(const std::string& text) {
  ConfigDoc doc;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config: malformed section at line " + std::to_string(lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("config: empty section name at line " + std::to_string(lineno));
      }
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    }
    doc.sections_[section][key] = value;
  }
  return doc;
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string ConfigDoc::get_str(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return fallback;
  const auto kt = it->second.find(key);
  return kt == it->second.end() ? fallback : kt->second;
}

std::string ConfigDoc::require_str(const std::string& section, const std::string& key) const {
  if (!has(section, key)) {
    throw ConfigError("config: missing required key [" + section + "] " + key);
  }
  return sections_.at(section).at(key);
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& s = sections_.at(section).at(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: [" + section + "] " + key + " is not a number: " + s);
}

long ConfigDoc::get_int(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& s = sections_.at(section).at(key);
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: [" + section + "] " + key + " is not an integer: " + s);
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& s = sections_.at(section).at(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: [" + section + "] " + key + " is not a boolean: " + s);
}

void ConfigDoc::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

std::string ConfigDoc::dump() const {
  std::stringstream out;
  for (const auto& [section, kv] : sections_) {
    out << '[' << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace visco
