#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfbgk/wiener.hpp"

using namespace hfbgk;

TEST_CASE("path starts at zero and is deterministic") {
  WienerPath p = sample_path(1, 2, 1.0, 4);
  REQUIRE(p.steps() == 4);
  CHECK(p.value(0, 0) == 0.0);
  CHECK(p.value(0, 1) == 0.0);
  WienerPath q = sample_path(1, 2, 1.0, 4);
  CHECK(p.values == q.values);
  WienerPath r = sample_path(2, 2, 1.0, 4);
  CHECK(p.values != r.values);
}

TEST_CASE("increments telescope and evaluate hits nodes") {
  WienerPath p = sample_path(7, 3, 2.0, 16);
  double sum0 = 0.0;
  for (int n = 0; n < p.steps(); ++n) sum0 += increment(p, n)[0];
  CHECK(sum0 == Catch::Approx(p.value(p.steps(), 0)).margin(1e-13));
  for (int n = 0; n <= p.steps(); ++n) {
    auto v = evaluate(p, p.t_grid[n]);
    for (int k = 0; k < p.d; ++k) CHECK(v[k] == Catch::Approx(p.value(n, k)).margin(0.0));
  }
  CHECK(evaluate(p, 0.0)[0] == 0.0);
  CHECK_THROWS_AS(increment(p, 16), std::out_of_range);
  CHECK_THROWS_AS(increment(p, -1), std::out_of_range);
  CHECK_THROWS_AS(evaluate(p, 2.5), std::out_of_range);
}

TEST_CASE("refinement preserves coarse nodes bit-exactly") {
  WienerPath p = sample_path(42, 2, 1.0, 8);
  WienerPath p2 = refine(p, 2);
  REQUIRE(p2.steps() == 16);
  CHECK(shares_coarse_nodes(p, p2));
  WienerPath p4a = refine(p2, 2);
  WienerPath p4b = refine(p, 4);
  REQUIRE(p4a.steps() == p4b.steps());
  // both refinements agree on the original nodes
  for (int n = 0; n <= p.steps(); ++n)
    for (int k = 0; k < p.d; ++k) {
      CHECK(p4a.value(4 * n, k) == p.value(n, k));
      CHECK(p4b.value(4 * n, k) == p.value(n, k));
    }
  CHECK(shares_coarse_nodes(p, p4a));
  CHECK(shares_coarse_nodes(p, p4b));
  WienerPath p3 = refine(p, 3);
  CHECK(shares_coarse_nodes(p, p3));
}

TEST_CASE("terminal statistics match the Wiener law", "[mc]") {
  const int n_seeds = 100000;
  const double T = 1.0;
  double s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    WienerPath p = sample_path(static_cast<std::uint64_t>(s), 2, T, 4);
    const double b1 = p.value(4, 0), b2 = p.value(4, 1);
    s1 += b1;
    s2 += b2;
    s11 += b1 * b1;
    s22 += b2 * b2;
    s12 += b1 * b2;
  }
  const double m1 = s1 / n_seeds, m2 = s2 / n_seeds;
  const double var1 = s11 / n_seeds - m1 * m1;
  const double var2 = s22 / n_seeds - m2 * m2;
  const double cov = s12 / n_seeds - m1 * m2;
  const double se_mean = std::sqrt(T / n_seeds);
  CHECK(std::abs(m1) < 4.0 * se_mean);
  CHECK(std::abs(m2) < 4.0 * se_mean);
  CHECK(var1 == Catch::Approx(T).epsilon(0.05));
  CHECK(var2 == Catch::Approx(T).epsilon(0.05));
  const double se_cov = T / std::sqrt(static_cast<double>(n_seeds));
  CHECK(std::abs(cov) < 5.0 * se_cov);
}

TEST_CASE("bridge midpoint has conditional variance dt/4", "[mc]") {
  const int n_seeds = 100000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n_seeds; ++k) {
    WienerPath p = sample_path(1000 + static_cast<std::uint64_t>(k), 1, 1.0, 1);
    WienerPath q = refine(p, 2);
    const double mid = q.value(1, 0);
    const double cond = mid - 0.5 * (p.value(0, 0) + p.value(1, 0));
    s += cond;
    s2 += cond * cond;
  }
  const double mean = s / n_seeds;
  const double var = s2 / n_seeds - mean * mean;
  CHECK(var == Catch::Approx(0.25).epsilon(0.05));
}
