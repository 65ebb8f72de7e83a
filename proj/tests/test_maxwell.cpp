#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfbgk/maxwell.hpp"
#include "hfbgk/problem.hpp"
#include "hfbgk/wiener.hpp"

using namespace hfbgk;

namespace {
double uniform(std::uint64_t ctr, double lo, double hi) {
  return lo + (hi - lo) * rng::u01(rng::mix64(ctr));
}
}  // namespace

TEST_CASE("closed form matches the defining integral") {
  // frozen value from the quadrature of the integral formula
  CHECK(maxwellian(0.0, -1.0, -1.0) == Catch::Approx(1.0 - std::exp(-1.0)).margin(1e-12));
  CHECK(maxwellian_oracle(0.0, -1.0, -1.0, 1000000) ==
        Catch::Approx(1.0 - std::exp(-1.0)).margin(1e-8));
  CHECK(maxwellian(0.0, -1.0, 0.5) == 0.0);
  CHECK(maxwellian(0.0, -1.0, 0.0) == 0.0);  // xi >= k branch is closed at xi = k
  CHECK(maxwellian(2.0, -1.0, 2.1) == 0.0);
  CHECK(maxwellian(5.0, -1.0, -50.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(maxwellian_oracle(5.0, -1.0, -50.0, 200000) == Catch::Approx(1.0).margin(1e-12));
  // Lambda = 0 collapses to the indicator
  CHECK(maxwellian(0.7, 0.0, 0.5) == 1.0);
  CHECK(maxwellian(0.7, 0.0, 0.9) == 0.0);
  CHECK_THROWS_AS(maxwellian(0.0, 0.5, 0.0), std::domain_error);
}

TEST_CASE("oracle agreement on 1000 random inputs") {
  int checked = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double k = uniform(3 * i, -10.0, 10.0);
    const double lam = uniform(3 * i + 1, 0.0, 10.0);
    const double xi = uniform(3 * i + 2, -10.0, 10.0);
    const double closed = maxwellian(k, -lam, xi);
    const double quad = maxwellian_oracle(k, -lam, xi, 300000);
    REQUIRE(std::abs(closed - quad) <= 1e-8);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("residual of the defining equation is small away from the kink") {
  XiGrid g(-8.0, 2.0, 10000);  // dxi = 1e-3
  CHECK(maxwellian_residual(0.0, -1.0, g) <= 1e-5);
  // Lambda = 0: the indicator satisfies the equation exactly off the jump
  XiGrid g2(-4.0, 4.0, 128);
  CHECK(maxwellian_residual(0.3, 0.0, g2) == 0.0);
  // grid hugging the kink still reports a finite number
  XiGrid tiny(-0.01, 0.01, 4);
  CHECK(std::isfinite(maxwellian_residual(0.0, -1.0, tiny)));
}

TEST_CASE("L1 distance between Maxwellians equals |k - k'|") {
  XiGrid g(-44.0, 3.0, 94000);
  CHECK(l1_distance(2.0, 0.5, -1.0, g) == Catch::Approx(1.5).margin(1e-6));
  CHECK(l1_distance(1.0, 1.0, -1.0, g) == 0.0);
  XiGrid g3(-125.0, 2.0, 254000);
  CHECK(l1_distance(1.0, 0.0, -3.0, g3) == Catch::Approx(1.0).margin(1e-6));
  XiGrid small(-2.0, 2.0, 100);
  CHECK_THROWS_AS(l1_distance(1.0, 0.0, -1.0, small), std::invalid_argument);
}

TEST_CASE("mass of M_k - 1_{0>xi} integrates to k + Lambda for constant Lambda") {
  XiGrid g(-60.0, 3.0, 126000);
  CHECK(maxwellian_mass(0.7, -1.0, g) == Catch::Approx(0.7 - 1.0).margin(1e-5));
  CHECK(maxwellian_mass(-0.4, -2.0, g) == Catch::Approx(-0.4 - 2.0).margin(1e-5));
  CHECK(maxwellian_mass(0.7, 0.0, g) == Catch::Approx(0.7).margin(1e-9));
}

TEST_CASE("pointwise ordering and monotone dependence on k") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    const double lam = uniform(7000 + 3 * i, 0.0, 5.0);
    double k1 = uniform(7000 + 3 * i + 1, -5.0, 5.0);
    double k2 = uniform(7000 + 3 * i + 2, -5.0, 5.0);
    if (k1 < k2) std::swap(k1, k2);
    for (double xi = -8.0; xi <= 6.0; xi += 0.25) {
      REQUIRE(maxwellian(k1, -lam, xi) >= maxwellian(k2, -lam, xi));
      const double h = 1e-5;
      const double dk = (maxwellian(k1 + h, -lam, xi) - maxwellian(k1 - h, -lam, xi)) / (2 * h);
      REQUIRE(dk >= -1e-12);
    }
  }
}

TEST_CASE("indicator cell average") {
  CHECK(indicator_cell_average(0.5, 0.0, 1.0) == 0.5);
  CHECK(indicator_cell_average(2.0, 0.0, 1.0) == 1.0);
  CHECK(indicator_cell_average(-3.0, 0.0, 1.0) == 0.0);
  CHECK(indicator_cell_average(0.25, 0.0, 1.0) == 0.25);
}

namespace {
KineticField indicator_field(const TorusGrid& xg, const XiGrid& vg, double u, double eps) {
  KineticField F(eps, xg, vg);
  for (int i = 0; i < xg.n; ++i)
    for (int j = 0; j < vg.n; ++j)
      F.at(i, j) = indicator_cell_average(u, vg.cell_lo(j), vg.cell_hi(j));
  return F;
}
}  // namespace

TEST_CASE("defect measure vanishes for the exact indicator with Lambda = 0") {
  Problem p = make_preset("P0");
  TorusGrid xg(8);
  XiGrid vg(p.xi_min, p.xi_max, 96);
  KineticField F = indicator_field(xg, vg, 0.7, 1.0);
  DefectField m = defect_measure(F, p, 1.0);
  for (double v : m.total) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("defect splits into field part F and zero relaxation for indicator data") {
  Problem p = make_preset("P1");  // Lambda = -1
  TorusGrid xg(4);
  XiGrid vg(p.xi_min, p.xi_max, 96);
  KineticField F = indicator_field(xg, vg, 0.3, 1.0);
  DefectField m = defect_measure(F, p, 1.0);
  for (int i = 0; i < xg.n; ++i)
    for (int j = 0; j < vg.n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * vg.n + j;
      CHECK(std::abs(m.relaxation[idx]) < 1e-12);
      CHECK(m.field[idx] == Catch::Approx(F.at(i, j)).margin(1e-14));
      CHECK(m.field[idx] >= 0.0);
    }
}

TEST_CASE("defect of the sampled Maxwellian stays above the discretization floor") {
  Problem p = make_preset("P1");
  TorusGrid xg(4);
  XiGrid vg(p.xi_min, p.xi_max, 192);
  KineticField F(1.0, xg, vg);
  const double u_level = 0.5;
  for (int i = 0; i < xg.n; ++i)
    for (int j = 0; j < vg.n; ++j) F.at(i, j) = maxwellian(u_level, -1.0, vg.center(j));
  DefectField m = defect_measure(F, p, 1.0);
  CHECK(m.min_total() >= -10.0 * vg.dxi);
}
