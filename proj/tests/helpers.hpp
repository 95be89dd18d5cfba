#pragma once

#include <random>

#include "visco/material.hpp"

namespace testutil {

/// The 2-piece golden material used throughout: equal halves with
/// (E, nu) = (1, 0.1) and (3, 0.2).
inline visco::MaterialProfile golden_two_piece() {
  return visco::MaterialProfile::piecewise_kv({{0.5, 1.0, 0.1}, {0.5, 3.0, 0.2}});
}

/// Random piecewise KV profile with values in [lo, hi].
inline visco::MaterialProfile random_kv(std::mt19937_64& rng, int max_layers, double lo,
                                        double hi) {
  std::uniform_int_distribution<int> nl(1, max_layers);
  std::uniform_real_distribution<double> val(lo, hi), len(0.2, 1.0);
  const int n = nl(rng);
  std::vector<visco::KvLayer> layers;
  for (int i = 0; i < n; ++i) layers.push_back({len(rng), val(rng), val(rng)});
  return visco::MaterialProfile::piecewise_kv(layers);
}

}  // namespace testutil
