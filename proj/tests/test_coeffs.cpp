#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfbgk/coeffs.hpp"
#include "hfbgk/problem.hpp"

using namespace hfbgk;

namespace {

// brute-force v-quadrature oracle for the exponential average
double exp_average_oracle(const std::function<double(double)>& f, int n = 1000000,
                          double v_cap = 50.0) {
  const double h = v_cap / n;
  double s = 0.5 * (f(0.0) * 1.0 + f(v_cap) * std::exp(-v_cap));
  for (int i = 1; i < n; ++i) {
    const double v = i * h;
    s += f(v) * std::exp(-v);
  }
  return s * h;
}

Problem constant_flux_problem(double c) {
  Problem p;
  p.dim_x = 1;
  p.a = [c](const XVec&, double) { return NVec{c, 0.0}; };
  p.da_dxi = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  p.div_a = [](const XVec&, double) { return 0.0; };
  p.lambda = [](const XVec&) { return -1.0; };
  p.xi_min = -8.0;
  p.xi_max = 4.0;
  return p;
}

}  // namespace

TEST_CASE("Gauss-Laguerre rule integrates polynomials and damped cosine") {
  const auto& r16 = gauss_laguerre(16);
  double fact10 = 0.0;
  for (std::size_t i = 0; i < r16.nodes.size(); ++i)
    fact10 += r16.weights[i] * std::pow(r16.nodes[i], 10);
  CHECK(fact10 == Catch::Approx(3628800.0).epsilon(1e-12));  // 10!

  const auto& r64 = gauss_laguerre(64);
  double wsum = 0.0, cosint = 0.0;
  for (std::size_t i = 0; i < r64.nodes.size(); ++i) {
    wsum += r64.weights[i];
    cosint += r64.weights[i] * std::cos(r64.nodes[i]);
  }
  CHECK(wsum == Catch::Approx(1.0).margin(1e-13));
  CHECK(cosint == Catch::Approx(0.5).margin(1e-12));  // int cos(v) e^{-v} dv = 1/2

  const auto& r256 = gauss_laguerre(256);
  double w256 = 0.0;
  for (double w : r256.weights) w256 += w;
  CHECK(w256 == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(gauss_laguerre(2), std::invalid_argument);
  CHECK_THROWS_AS(gauss_laguerre(512), std::invalid_argument);
}

TEST_CASE("b coefficient: exponential average of a") {
  Problem p1 = make_preset("P1");  // a = e^{-xi^2}, Lambda = -1
  const XVec x = make_x(0.2);

  // Lambda = 0 short-circuits to a
  Problem p0 = make_preset("P0");
  CHECK(b_coeff(p0, x, 0.7)[0] == p0.a(x, 0.7)[0]);

  // brute-force oracle at xi = 0: int e^{-v^2} e^{-v} dv
  const double oracle = exp_average_oracle([](double v) { return std::exp(-v * v); });
  CHECK(b_coeff(p1, x, 0.0, 64)[0] == Catch::Approx(oracle).margin(1e-8));

  // constant a: average of a constant
  Problem pc = constant_flux_problem(2.5);
  CHECK(b_coeff(pc, x, -1.0)[0] == Catch::Approx(2.5).margin(1e-12));
}

TEST_CASE("order doubling leaves the quadrature unchanged on presets") {
  Problem p1 = make_preset("P1");
  const XVec x = make_x(0.4);
  for (double u : {-1.0, 0.0, 1.0}) {
    const double B64 = flux_B(p1, x, u, 64, 20000).value[0];
    const double B128 = flux_B(p1, x, u, 128, 20000).value[0];
    CHECK(std::abs(B64 - B128) < 1e-10);
  }
  for (double xi : {-2.0, -0.5, 0.0, 1.0}) {
    const double v128 = b_coeff(p1, x, xi, 128)[0];
    const double v256 = b_coeff(p1, x, xi, 256)[0];
    CHECK(std::abs(v128 - v256) < 1e-10);
  }
}

TEST_CASE("b solves its defining equation") {
  Problem p1 = make_preset("P1");
  const XVec x = make_x(0.6);
  for (double xi : {-1.5, 0.0, 0.8}) CHECK(residual_b(p1, x, xi, 1e-4) <= 1e-6);
  Problem p0 = make_preset("P0");
  CHECK(residual_b(p0, x, 0.3, 1e-4) <= 1e-12);  // Lambda = 0
  Problem pc = constant_flux_problem(1.3);
  CHECK(residual_b(pc, x, 0.0, 1e-4) <= 1e-10);  // constant a
}

TEST_CASE("c coefficient") {
  // Lambda = 0: c_k = dg_k/dxi
  Problem p;
  p.dim_x = 1;
  p.a = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  p.lambda = [](const XVec&) { return 0.0; };
  NoiseComponent nc;
  nc.g = [](const XVec&, double xi) { return std::sin(xi); };
  nc.dg_dxi = [](const XVec&, double xi) { return std::cos(xi); };
  p.noise.push_back(nc);
  p.xi_min = -8.0;
  p.xi_max = 8.0;
  const XVec x = make_x(0.0);
  CHECK(c_coeff(p, 0, x, 0.4) == Catch::Approx(std::cos(0.4)).margin(1e-14));

  // g = sin(xi), Lambda = -1, xi = 0: int cos(-v) e^{-v} dv = 1/2
  Problem pl = p;
  pl.lambda = [](const XVec&) { return -1.0; };
  CHECK(c_coeff(pl, 0, x, 0.0, 64) == Catch::Approx(0.5).margin(1e-10));

  // g identically zero
  Problem pz = pl;
  pz.noise[0].g = [](const XVec&, double) { return 0.0; };
  pz.noise[0].dg_dxi = [](const XVec&, double) { return 0.0; };
  CHECK(c_coeff(pz, 0, x, 0.3) == 0.0);
}

TEST_CASE("flux B against the erf antiderivative") {
  Problem p0 = make_preset("P0");  // Lambda = 0, a = e^{-xi^2}
  const XVec x = make_x(0.5);
  auto erf_oracle = [](double u) {
    return 0.5 * std::sqrt(std::numbers::pi) * (1.0 + std::erf(u));
  };
  for (double u : {-1.0, 0.0, 0.5, 2.0}) {
    FluxResult B = flux_B(p0, x, u, 64, 150000);
    CHECK(B.value[0] == Catch::Approx(erf_oracle(u)).margin(1e-8));
    CHECK(B.quad_error_est < 1e-7);
  }
  FluxResult B0 = flux_B(p0, x, p0.xi_min, 64, 100);
  CHECK(B0.value[0] == 0.0);  // empty integration range
  CHECK_THROWS_AS(flux_B(p0, x, 100.0, 64, 100), std::domain_error);

  // C_1 with dg/dxi = e^{-xi^2}: same antiderivative
  Problem pg = p0;
  NoiseComponent nc;
  nc.g = [](const XVec&, double xi) { return 0.5 * std::sqrt(std::numbers::pi) * std::erf(xi); };
  nc.dg_dxi = [](const XVec&, double xi) { return std::exp(-xi * xi); };
  pg.noise.push_back(nc);
  Flux1Result C = noise_C(pg, 0, x, 0.5, 64, 150000);
  CHECK(C.value == Catch::Approx(erf_oracle(0.5)).margin(1e-8));
}

TEST_CASE("dB/du recovers b to 1e-5 (fundamental theorem)") {
  Problem p1 = make_preset("P1");
  const XVec x = make_x(0.4);
  const double h = 1e-3;
  for (double u : {-0.8, 0.1, 1.2}) {
    const double fd = (flux_B(p1, x, u + h, 64, 60000).value[0] -
                       flux_B(p1, x, u - h, 64, 60000).value[0]) /
                      (2.0 * h);
    CHECK(fd == Catch::Approx(b_coeff(p1, x, u, 64)[0]).margin(1e-5));
  }
}

TEST_CASE("flux tail estimate reflects the dropped lower tail") {
  Problem p1 = make_preset("P1");
  const XVec x = make_x(0.0);
  FluxResult B = flux_B(p1, x, 0.0, 64, 20000);
  CHECK(B.tail_estimate >= 0.0);
  CHECK(B.tail_estimate < 1e-8);  // gaussian flux decays fast below xi_min = -8
}

TEST_CASE("property iv: int a M_k = B(x,k)") {
  const XVec x = make_x(0.25);
  // Lambda = 0: both sides reduce to the plain antiderivative
  Problem p0 = make_preset("P0");
  XiGrid g0(-8.0, 4.0, 60000);
  PropIvResult r0 = check_prop_iv(p0, x, 0.3, g0, 64, 200000);
  CHECK(r0.gap <= 1e-8);

  // high-field case, independent routes
  Problem p1 = make_preset("P1");
  XiGrid g1(-44.0, 4.0, 96000);
  for (double k : {-1.0, 0.0, 1.0}) {
    PropIvResult r = check_prop_iv(p1, x, k, g1, 64, 100000);
    INFO("k = " << k);
    CHECK(r.gap <= 1e-6);
  }

  // a identically zero: both sides vanish
  Problem pz = p1;
  pz.a = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  pz.da_dxi = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  PropIvResult rz = check_prop_iv(pz, x, 0.0, g1, 64, 1000);
  CHECK(rz.lhs[0] == 0.0);
  CHECK(std::abs(rz.rhs[0]) <= 1e-300);
  CHECK_THROWS_AS(check_prop_iv(p1, x, 0.0, XiGrid(-2.0, 2.0, 64), 64, 100),
                  std::invalid_argument);
}

TEST_CASE("coefficient table interpolates B, b, C") {
  Problem p1 = make_preset("P2");  // has noise and Lambda = -1
  std::vector<double> xs{0.125, 0.375, 0.625, 0.875};
  std::vector<double> ug;
  for (int i = 0; i <= 40; ++i) ug.push_back(-2.0 + 4.0 * i / 40.0);
  CoefficientTable t = build_coefficient_table(p1, xs, ug, 64, 16);

  // table values against direct quadrature at off-node queries
  for (double u : {-1.37, 0.21, 1.93}) {
    FluxResult direct = flux_B(p1, make_x(xs[1]), u, 64, 60000);
    CHECK(t.eval_B(1, u) == Catch::Approx(direct.value[0]).margin(3e-4));
    Flux1Result Cd = noise_C(p1, 0, make_x(xs[1]), u, 64, 60000);
    CHECK(t.eval_C(1, 0, u) == Catch::Approx(Cd.value).margin(3e-4));
  }

  // dB/du recovers b (fundamental theorem on the tabulation)
  for (double u : {-1.1, 0.4, 1.6}) {
    const double b_direct = b_coeff(p1, make_x(xs[2]), u, 64)[0];
    CHECK(t.eval_b(2, u) == Catch::Approx(b_direct).margin(5e-3));
  }

  // B nondecreasing in u for nonnegative a
  for (int iu = 1; iu < t.nu(); ++iu)
    REQUIRE(t.B_val[(static_cast<std::size_t>(0) * t.nu() + iu)] >=
            t.B_val[(static_cast<std::size_t>(0) * t.nu() + iu - 1)] - 1e-12);

  // C_k(x,0) = 0 for truncated noise with g(x,0) = 0 and Lambda = 0
  Problem pn = make_preset("P2", [] {
    PresetParams prm;
    prm.lambda_const = 0.0;
    return prm;
  }());
  CoefficientTable t0 = build_coefficient_table(pn, xs, ug, 64, 16);
  CHECK(std::abs(t0.eval_C(0, 0, 0.0)) <= 1e-6);

  CHECK_THROWS_AS(t.eval_B(0, 99.0), std::domain_error);
  CHECK(t.max_abs_b(0, -1.0, 1.0) > 0.0);
  CHECK(t.max_abs_b_global() >= t.max_abs_b(0, -1.0, 1.0) - 1e-15);
}

TEST_CASE("two-dimensional coefficient evaluation") {
  Problem p;
  p.dim_x = 2;
  p.a = [](const XVec&, double xi) {
    const double g = std::exp(-xi * xi);
    return NVec{g, 2.0 * g};
  };
  p.da_dxi = [](const XVec&, double xi) {
    const double dg = -2.0 * xi * std::exp(-xi * xi);
    return NVec{dg, 2.0 * dg};
  };
  p.div_a = [](const XVec&, double) { return 0.0; };
  p.lambda = [](const XVec&) { return -1.0; };
  p.xi_min = -8.0;
  p.xi_max = 4.0;

  ValidationReport rep = validate(p, 7);
  CHECK(rep.all_pass());

  const XVec x = make_x(0.3, 0.7);
  NVec b = b_coeff(p, x, 0.0, 64);
  CHECK(b[1] == Catch::Approx(2.0 * b[0]).margin(1e-14));
  CHECK(residual_b(p, x, 0.2, 1e-4) <= 1e-6);

  FluxResult B = flux_B(p, x, 0.5, 64, 60000);
  CHECK(B.value[1] == Catch::Approx(2.0 * B.value[0]).margin(1e-10));

  XiGrid g(-44.0, 4.0, 96000);
  PropIvResult iv = check_prop_iv(p, x, 0.0, g, 64, 60000);
  CHECK(iv.gap <= 1e-6);
}
