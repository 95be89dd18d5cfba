#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace visco {

/// One constant piece of a Kelvin-Voigt unit cell.
struct KvLayer {
  double length;  // fraction of the unit cell
  double E;       // elastic modulus
  double nu;      // viscosity
};

/// One constant piece of a standard-linear-solid unit cell.
struct SlsLayer {
  double length;
  double E1;  // parallel spring
  double E2;  // Maxwell-arm spring
  double nu;  // Maxwell-arm dashpot
};

enum class ProfileKind { PiecewiseKV, AnalyticKV, PiecewiseSLS };

/// Unit-cell material description: piecewise-constant layers or analytic
/// E(y), nu(y) on [0,1]. Immutable after construction; layer lengths are
/// renormalized to sum to 1 and identical adjacent layers are merged.
class MaterialProfile {
 public:
  static MaterialProfile piecewise_kv(std::vector<KvLayer> layers);
  static MaterialProfile analytic_kv(std::function<double(double)> E,
                                     std::function<double(double)> nu);
  static MaterialProfile piecewise_sls(std::vector<SlsLayer> layers);

  ProfileKind kind() const { return kind_; }

  /// (E, nu) at position y in [0,1]. Layer membership uses half-open
  /// intervals [a_{l-1}, a_l); y = 1 belongs to the last layer.
  std::pair<double, double> sample(double y) const;

  /// Midpoint-sampled piecewise-constant approximation of an analytic
  /// profile on a uniform partition with n_pieces sub-intervals.
  MaterialProfile piecewise_approximate(int n_pieces) const;

  const std::vector<KvLayer>& kv_layers() const;
  const std::vector<SlsLayer>& sls_layers() const;

  /// Short content digest used for dataset provenance.
  std::string digest() const;

 private:
  MaterialProfile() = default;

  ProfileKind kind_ = ProfileKind::PiecewiseKV;
  std::vector<KvLayer> kv_;
  std::vector<SlsLayer> sls_;
  std::function<double(double)> fE_, fnu_;
};

}  // namespace visco
