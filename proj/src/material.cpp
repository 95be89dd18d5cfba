#include "visco/material.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace visco {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("material: ") + name +
                                " must be strictly positive and finite");
  }
}

template <typename Layer>
void normalize_lengths(std::vector<Layer>& layers) {
  if (layers.empty()) throw std::invalid_argument("material: no layers");
  double total = 0.0;
  for (const auto& l : layers) {
    check_positive(l.length, "layer length");
    total += l.length;
  }
  for (auto& l : layers) l.length /= total;
}

}  // namespace

MaterialProfile MaterialProfile::piecewise_kv(std::vector<KvLayer> layers) {
  normalize_lengths(layers);
  std::vector<KvLayer> merged;
  for (const auto& l : layers) {
    check_positive(l.E, "E");
    check_positive(l.nu, "nu");
    if (!merged.empty() && merged.back().E == l.E && merged.back().nu == l.nu) {
      merged.back().length += l.length;
    } else {
      merged.push_back(l);
    }
  }
  MaterialProfile p;
  p.kind_ = ProfileKind::PiecewiseKV;
  p.kv_ = std::move(merged);
  return p;
}

MaterialProfile MaterialProfile::analytic_kv(std::function<double(double)> E,
                                             std::function<double(double)> nu) {
  if (!E || !nu) throw std::invalid_argument("material: null analytic callable");
  MaterialProfile p;
  p.kind_ = ProfileKind::AnalyticKV;
  p.fE_ = std::move(E);
  p.fnu_ = std::move(nu);
  return p;
}

MaterialProfile MaterialProfile::piecewise_sls(std::vector<SlsLayer> layers) {
  normalize_lengths(layers);
  std::vector<SlsLayer> merged;
  for (const auto& l : layers) {
    check_positive(l.E1, "E1");
    check_positive(l.E2, "E2");
    check_positive(l.nu, "nu");
    if (!merged.empty() && merged.back().E1 == l.E1 && merged.back().E2 == l.E2 &&
        merged.back().nu == l.nu) {
      merged.back().length += l.length;
    } else {
      merged.push_back(l);
    }
  }
  MaterialProfile p;
  p.kind_ = ProfileKind::PiecewiseSLS;
  p.sls_ = std::move(merged);
  return p;
}

std::pair<double, double> MaterialProfile::sample(double y) const {
  if (y < 0.0 || y > 1.0) {
    throw std::domain_error("material: sample position outside [0,1]");
  }
  switch (kind_) {
    case ProfileKind::AnalyticKV:
      return {fE_(y), fnu_(y)};
    case ProfileKind::PiecewiseKV: {
      double a = 0.0;
      for (const auto& l : kv_) {
        a += l.length;
        if (y < a) return {l.E, l.nu};
      }
      return {kv_.back().E, kv_.back().nu};  // y == 1
    }
    case ProfileKind::PiecewiseSLS:
      throw std::invalid_argument("material: sample() is only defined for KV profiles");
  }
  throw std::logic_error("material: bad kind");
}

MaterialProfile MaterialProfile::piecewise_approximate(int n_pieces) const {
  if (kind_ != ProfileKind::AnalyticKV) {
    throw std::invalid_argument("material: piecewise_approximate requires an analytic profile");
  }
  if (n_pieces < 1) throw std::invalid_argument("material: n_pieces must be >= 1");
  std::vector<KvLayer> layers;
  layers.reserve(static_cast<size_t>(n_pieces));
  const double w = 1.0 / n_pieces;
  for (int i = 0; i < n_pieces; ++i) {
    const double mid = (i + 0.5) * w;
    layers.push_back({w, fE_(mid), fnu_(mid)});
  }
  return piecewise_kv(std::move(layers));
}

const std::vector<KvLayer>& MaterialProfile::kv_layers() const {
  if (kind_ != ProfileKind::PiecewiseKV) {
    throw std::invalid_argument("material: not a piecewise KV profile");
  }
  return kv_;
}

const std::vector<SlsLayer>& MaterialProfile::sls_layers() const {
  if (kind_ != ProfileKind::PiecewiseSLS) {
    throw std::invalid_argument("material: not a piecewise SLS profile");
  }
  return sls_;
}

std::string MaterialProfile::digest() const {
  char buf[64];
  std::string out;
  switch (kind_) {
    case ProfileKind::PiecewiseKV:
      out = "kv";
      for (const auto& l : kv_) {
        std::snprintf(buf, sizeof(buf), ":%.12g,%.12g,%.12g", l.length, l.E, l.nu);
        out += buf;
      }
      break;
    case ProfileKind::PiecewiseSLS:
      out = "sls";
      for (const auto& l : sls_) {
        std::snprintf(buf, sizeof(buf), ":%.12g,%.12g,%.12g,%.12g", l.length, l.E1, l.E2, l.nu);
        out += buf;
      }
      break;
    case ProfileKind::AnalyticKV: {
      // Analytic callables are opaque; fingerprint by dense sampling.
      out = "analytic";
      for (int i = 0; i <= 16; ++i) {
        const double y = i / 16.0;
        std::snprintf(buf, sizeof(buf), ":%.12g,%.12g", fE_(y), fnu_(y));
        out += buf;
      }
      break;
    }
  }
  // FNV-1a over the canonical string keeps the digest short.
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : out) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return buf;
}

}  // namespace visco
