#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "visco/datagen.hpp"
#include "visco/macrosolver.hpp"
#include "visco/microsolver.hpp"
#include "visco/nn.hpp"

namespace visco {

/// Shortest round-trip-exact decimal rendering (17 significant digits).
std::string fmt_double(double x);

// --- results ---------------------------------------------------------------

/// Columns t, u(x_0), ..., u(x_n); grid metadata in leading '#' lines.
void write_sim_result_csv(const std::string& path, const SimResult& res);
SimResult read_sim_result_csv(const std::string& path);

/// Columns t, b, c, sigma[, xi_1.., xidot_1..].
void write_trajectory_csv(const std::string& path, const Trajectory& tr);
Trajectory read_trajectory_csv(const std::string& path);

/// Columns t, e.
void write_error_curve_csv(const std::string& path, const ErrorCurve& curve);

/// Columns epoch, train_loss, test_accessible, test_train_kind.
void write_loss_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

/// Curve CSVs (one family per file: fixed_value, x, y) plus an R^2 table
/// (family, fixed_value, r2) at <dir>/r2_table.csv.
void write_probe_curves(const std::string& dir, const std::vector<ProbeCurve>& curves);

// --- datasets ----------------------------------------------------------------

/// manifest.txt (key = value) plus traj_NNNN.csv files.
void write_dataset(const std::string& dir, const Dataset& data);
Dataset read_dataset(const std::string& dir);

// --- surrogate weights -------------------------------------------------------

/// Versioned flat binary: magic "VSRW", version, L0, flags, per-network layer
/// sizes; body is little-endian float64, row-major weights then bias, F then G.
void write_surrogate(const std::string& path, const SurrogatePair& sur);
SurrogatePair read_surrogate(const std::string& path);

// --- config ------------------------------------------------------------------

/// TOML-style document: [section] headers, key = value lines, '#' comments.
class ConfigDoc {
 public:
  static ConfigDoc parse_file(const std::string& path);
  static ConfigDoc parse_text(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  std::string require_str(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Canonical serialization (sections and keys sorted) for the
  /// resolved-config echo.
  std::string dump() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace visco
