#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "visco/material.hpp"

using namespace visco;

namespace {

MaterialProfile tanh_profile() {
  return MaterialProfile::analytic_kv(
      [](double y) { return 2.0 + std::tanh((y - 0.5) / 0.2); },
      [](double y) { return 0.1 + 0.05 * std::tanh((y - 0.5) / 0.2); });
}

double sup_error(const MaterialProfile& exact, const MaterialProfile& approx) {
  double worst = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double y = i / 10000.0;
    worst = std::max(worst, std::abs(exact.sample(y).first - approx.sample(y).first));
    worst = std::max(worst, std::abs(exact.sample(y).second - approx.sample(y).second));
  }
  return worst;
}

}  // namespace

TEST_CASE("sample: single constant layer") {
  auto prof = MaterialProfile::piecewise_kv({{1.0, 1.0, 0.1}});
  auto [E, nu] = prof.sample(0.7);
  CHECK(E == doctest::Approx(1.0));
  CHECK(nu == doctest::Approx(0.1));
}

TEST_CASE("sample: golden two-piece material") {
  auto prof = testutil::golden_two_piece();
  auto [E, nu] = prof.sample(0.75);
  CHECK(E == doctest::Approx(3.0));
  CHECK(nu == doctest::Approx(0.2));
  // half-open convention: 0.5 belongs to the second layer, y=1 to the last
  CHECK(prof.sample(0.5).first == doctest::Approx(3.0));
  CHECK(prof.sample(0.0).first == doctest::Approx(1.0));
  CHECK(prof.sample(1.0).first == doctest::Approx(3.0));
}

TEST_CASE("sample: analytic tanh profile at the midpoint") {
  CHECK(tanh_profile().sample(0.5).first == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sample: out-of-domain positions are rejected") {
  auto prof = testutil::golden_two_piece();
  CHECK_THROWS_AS(prof.sample(-0.01), std::domain_error);
  CHECK_THROWS_AS(prof.sample(1.01), std::domain_error);
}

TEST_CASE("construction: invariants enforced") {
  CHECK_THROWS_AS(MaterialProfile::piecewise_kv({}), std::invalid_argument);
  CHECK_THROWS_AS(MaterialProfile::piecewise_kv({{1.0, -1.0, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(MaterialProfile::piecewise_kv({{1.0, 1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(MaterialProfile::piecewise_sls({{1.0, 1.0, 0.0, 0.1}}), std::invalid_argument);
}

TEST_CASE("construction: lengths renormalized and identical neighbors merged") {
  // lengths 1:3 normalize to 0.25 / 0.75
  auto prof = MaterialProfile::piecewise_kv({{2.0, 1.0, 0.1}, {6.0, 3.0, 0.2}});
  CHECK(prof.kv_layers()[0].length == doctest::Approx(0.25));
  CHECK(prof.kv_layers()[1].length == doctest::Approx(0.75));

  auto merged = MaterialProfile::piecewise_kv({{0.3, 1.0, 0.1}, {0.2, 1.0, 0.1}, {0.5, 3.0, 0.2}});
  CHECK(merged.kv_layers().size() == 2);
  CHECK(merged.kv_layers()[0].length == doctest::Approx(0.5));
}

TEST_CASE("merging never changes sample() away from boundaries") {
  auto a = MaterialProfile::piecewise_kv({{0.3, 1.0, 0.1}, {0.2, 1.0, 0.1}, {0.5, 3.0, 0.2}});
  auto b = MaterialProfile::piecewise_kv({{0.5, 1.0, 0.1}, {0.5, 3.0, 0.2}});
  for (double y : {0.05, 0.31, 0.49, 0.63, 0.99}) {
    CHECK(a.sample(y).first == doctest::Approx(b.sample(y).first).epsilon(1e-14));
    CHECK(a.sample(y).second == doctest::Approx(b.sample(y).second).epsilon(1e-14));
  }
}

TEST_CASE("piecewise_approximate: constant profile collapses to one layer") {
  auto prof = MaterialProfile::analytic_kv([](double) { return 2.0; },
                                           [](double) { return 0.5; });
  auto pc = prof.piecewise_approximate(7);
  REQUIRE(pc.kv_layers().size() == 1);
  CHECK(pc.kv_layers()[0].E == doctest::Approx(2.0));
  CHECK(pc.kv_layers()[0].nu == doctest::Approx(0.5));
}

TEST_CASE("piecewise_approximate: midpoint values for n=2") {
  auto pc = tanh_profile().piecewise_approximate(2);
  REQUIRE(pc.kv_layers().size() == 2);
  CHECK(pc.kv_layers()[0].E == doctest::Approx(2.0 + std::tanh(-1.25)).epsilon(1e-12));
  CHECK(pc.kv_layers()[1].E == doctest::Approx(2.0 + std::tanh(1.25)).epsilon(1e-12));
}

TEST_CASE("piecewise_approximate: rejects n = 0") {
  CHECK_THROWS_AS(tanh_profile().piecewise_approximate(0), std::invalid_argument);
  // only meaningful for analytic profiles
  CHECK_THROWS(testutil::golden_two_piece().piecewise_approximate(4));
}

TEST_CASE("piecewise_approximate: sup error decreases as n doubles") {
  auto exact = tanh_profile();
  double prev = sup_error(exact, exact.piecewise_approximate(4));
  for (int n : {8, 16, 32, 64}) {
    const double cur = sup_error(exact, exact.piecewise_approximate(n));
    CHECK(cur < prev);
    prev = cur;
  }
  // constructive approximation: some n achieves any tolerance
  // midpoint sampling error is bounded by max|E'| / (2n) = 5 / (2n)
  CHECK(sup_error(exact, exact.piecewise_approximate(8192)) < 5e-4);
}

TEST_CASE("SLS profiles: sampling is KV-only, layers accessible") {
  auto sls = MaterialProfile::piecewise_sls({{0.5, 1.0, 3.0, 0.2}, {0.5, 2.0, 1.0, 0.1}});
  CHECK(sls.kind() == ProfileKind::PiecewiseSLS);
  CHECK(sls.sls_layers().size() == 2);
  CHECK_THROWS(sls.sample(0.3));
}

TEST_CASE("digest: stable and content-sensitive") {
  auto a = testutil::golden_two_piece();
  auto b = testutil::golden_two_piece();
  auto c = MaterialProfile::piecewise_kv({{0.5, 1.0, 0.1}, {0.5, 3.0, 0.21}});
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
  CHECK(!a.digest().empty());
}
