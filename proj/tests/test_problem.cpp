#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hfbgk/cutoff.hpp"
#include "hfbgk/problem.hpp"

using namespace hfbgk;

namespace {

// independent quadrature of the normalized exp(1/(t^2-1)) bump
double bump_integral_oracle(double lo, double hi, int n = 200000) {
  auto f = [](double t) { return cutoff::bump_raw(t); };
  double s = 0.0;
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    const double a = lo + i * h, b = a + h;
    s += (h / 6.0) * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  return s;
}

double theta_oracle(double s) {
  const double a = std::abs(s);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  static const double total = bump_integral_oracle(-1.0, 1.0);
  return bump_integral_oracle(4.0 * a - 3.0, 1.0) / total;
}

Problem quadratic_noise_problem(double sigma0) {
  Problem p;
  p.dim_x = 1;
  p.name = "g=xi*sigma(x)";
  p.a = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  p.div_a = [](const XVec&, double) { return 0.0; };
  p.lambda = [](const XVec&) { return 0.0; };
  NoiseComponent nc;
  nc.g = [sigma0](const XVec& x, double xi) {
    return xi * sigma0 * (1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * x[0]));
  };
  nc.dg_dxi = [sigma0](const XVec& x, double) {
    return sigma0 * (1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * x[0]));
  };
  p.noise.push_back(nc);
  p.xi_min = -4.0;
  p.xi_max = 4.0;
  return p;
}

}  // namespace

TEST_CASE("cutoff matches the paper bump profile") {
  CHECK(cutoff::theta(0.2) == 1.0);
  CHECK(cutoff::theta(-0.5) == 1.0);
  CHECK(cutoff::theta(1.1) == 0.0);
  CHECK(cutoff::theta(0.75) == Catch::Approx(0.5).margin(1e-10));  // midpoint by symmetry
  for (double s : {0.55, 0.6, 0.75, 0.9, 0.97})
    CHECK(cutoff::theta(s) == Catch::Approx(theta_oracle(s)).margin(1e-8));
  // derivative consistent with finite differences
  for (double s : {0.6, 0.8, 0.9}) {
    const double h = 1e-6;
    const double fd = (cutoff::theta(s + h) - cutoff::theta(s - h)) / (2 * h);
    CHECK(cutoff::theta_deriv(s) == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("presets pass validation") {
  for (const std::string id : {"P0", "P1", "P2", "P3"}) {
    Problem p = make_preset(id);
    ValidationReport rep = validate(p, 17);
    INFO("preset " << id);
    CHECK(rep.all_pass());
    CHECK(rep.checks.size() == 6);  // every model assumption exactly once
  }
}

TEST_CASE("validation is deterministic") {
  Problem p = make_preset("P2");
  ValidationReport a = validate(p, 13);
  ValidationReport b = validate(p, 13);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].pass == b.checks[i].pass);
    CHECK(a.checks[i].worst_value == b.checks[i].worst_value);
  }
  CHECK(a.fitted_G2_constant == b.fitted_G2_constant);
}

TEST_CASE("positive Lambda is flagged with a witness") {
  Problem p = make_preset("P0");
  p.lambda = [](const XVec&) { return 0.1; };
  ValidationReport rep = validate(p, 9);
  bool found = false;
  for (const auto& c : rep.checks)
    if (c.name == "lambda_nonpositive") {
      found = true;
      CHECK_FALSE(c.pass);
      CHECK(c.worst_value == Catch::Approx(0.1));
    }
  CHECK(found);
}

TEST_CASE("sign-changing divergence is flagged") {
  Problem p;
  p.dim_x = 1;
  p.a = [](const XVec& x, double xi) {
    return NVec{-std::sin(2.0 * std::numbers::pi * x[0]) * std::exp(-xi * xi), 0.0};
  };
  p.lambda = [](const XVec&) { return 0.0; };
  p.xi_min = -4.0;
  p.xi_max = 4.0;
  ValidationReport rep = validate(p, 9);  // lattice contains x = 0
  CHECK(rep.used_finite_differences);
  bool found = false;
  for (const auto& c : rep.checks)
    if (c.name == "div_a_nonnegative") {
      found = true;
      CHECK_FALSE(c.pass);
      CHECK(c.worst_value < -1.0);  // -2 pi e^{-xi^2} near x=0
    }
  CHECK(found);
}

TEST_CASE("coefficient evaluation failure names the field") {
  Problem p = make_preset("P0");
  p.a = [](const XVec&, double) {
    return NVec{std::numeric_limits<double>::quiet_NaN(), 0.0};
  };
  p.div_a = nullptr;
  p.da_dxi = nullptr;
  try {
    validate(p, 5);
    FAIL("expected CoefficientError");
  } catch (const CoefficientError& e) {
    CHECK(std::string(e.what()).find("div_x a") != std::string::npos);
  }
}

TEST_CASE("truncation masks coefficients outside the cutoff") {
  Problem p = make_preset("P0");
  const double R = 2.0;
  Problem q = truncate(p, R);
  const XVec x = make_x(0.3);
  CHECK(q.a(x, R / 4)[0] == Catch::Approx(p.a(x, R / 4)[0]).margin(0.0));
  CHECK(q.a(x, 2 * R)[0] == 0.0);
  CHECK(q.a(x, 0.75 * R)[0] ==
        Catch::Approx(p.a(x, 0.75 * R)[0] * theta_oracle(0.75)).margin(1e-8));
  // idempotence for R' >= 2R on |xi| <= R/2
  Problem qq = truncate(q, 2 * R);
  for (double xi : {-0.9, -0.3, 0.0, 0.5, 0.99})
    CHECK(qq.a(x, xi)[0] == Catch::Approx(q.a(x, xi)[0]).margin(1e-15));
}

TEST_CASE("truncated derivatives follow the product rule") {
  Problem p = make_preset("P0");
  Problem q = truncate(p, 2.0);
  const XVec x = make_x(0.1);
  for (double xi : {0.3, 1.2, 1.7, 2.5}) {
    const double h = 1e-6;
    const double fd = (q.a(x, xi + h)[0] - q.a(x, xi - h)[0]) / (2 * h);
    CHECK(eval_da_dxi(q, x, xi)[0] == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("finite differences track analytic derivatives on smooth presets") {
  Problem p = make_preset("P1");
  Problem pfd = p;
  pfd.da_dxi = nullptr;
  pfd.div_a = nullptr;
  const XVec x = make_x(0.37);
  for (double xi : {-2.0, -0.5, 0.4, 1.3}) {
    const double exact = eval_da_dxi(p, x, xi)[0];
    const double fd = eval_da_dxi(pfd, x, xi)[0];
    if (std::abs(exact) > 1e-10) CHECK(fd == Catch::Approx(exact).epsilon(1e-5));
    CHECK(eval_div_a(pfd, x, xi) == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("noise magnitude evaluation") {
  Problem p = quadratic_noise_problem(0.5);
  const XVec x = make_x(0.2);
  const double sig = 0.5 * (1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * 0.2));
  for (double xi : {-1.0, 0.0, 0.7, 2.0}) {
    CHECK(eval_G2(p, x, xi) == Catch::Approx(sig * sig * xi * xi).margin(1e-14));
    CHECK(eval_dG2_dxi(p, x, xi) == Catch::Approx(2.0 * sig * sig * xi).margin(1e-12));
  }
  // odd function: derivative of G^2 vanishes at xi = 0
  Problem ps;
  ps.dim_x = 1;
  ps.a = [](const XVec&, double) { return NVec{0.0, 0.0}; };
  ps.lambda = [](const XVec&) { return 0.0; };
  NoiseComponent nc;
  nc.g = [](const XVec&, double xi) { return 0.7 * std::sin(xi); };
  ps.noise.push_back(nc);
  ps.xi_min = -4.0;
  ps.xi_max = 4.0;
  CHECK(eval_dG2_dxi(ps, make_x(0.0), 0.0) == Catch::Approx(0.0).margin(1e-9));
}
