#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hfbgk/cutoff.hpp"
#include "hfbgk/grid.hpp"

namespace hfbgk {

// Thrown when a user coefficient produces NaN/inf; message names the field
// and the sample point.
struct CoefficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoiseComponent {
  std::function<double(const XVec&, double)> g;
  std::function<double(const XVec&, double)> dg_dxi;  // optional; finite differences otherwise
};

// Coefficient bundle (a, Lambda, g_1..g_d) on the torus x truncated velocity
// interval, plus optional analytic derivatives. Immutable after construction;
// all evaluation is pure.
struct Problem {
  int dim_x = 1;
  std::function<NVec(const XVec&, double)> a;
  std::function<NVec(const XVec&, double)> da_dxi;      // optional
  std::function<double(const XVec&, double)> div_a;     // optional (div_x a)
  std::function<double(const XVec&)> lambda;
  std::vector<NoiseComponent> noise;
  double xi_min = -8.0;
  double xi_max = 4.0;
  double trunc_R = 0.0;  // 0 = no Theta_R mask applied
  std::string name;

  int noise_dim() const { return static_cast<int>(noise.size()); }
  bool has_noise() const { return !noise.empty(); }
};

namespace detail {

inline constexpr double kFdStep = 1e-6;

inline void require_finite(double v, const char* field, const XVec& x, double xi) {
  if (!std::isfinite(v))
    throw CoefficientError(std::string("coefficient evaluation failed: ") + field + " at (x=" +
                           std::to_string(x[0]) + "," + std::to_string(x[1]) +
                           ", xi=" + std::to_string(xi) + ")");
}

}  // namespace detail

inline NVec eval_a(const Problem& p, const XVec& x, double xi) { return p.a(x, xi); }

inline NVec eval_da_dxi(const Problem& p, const XVec& x, double xi) {
  if (p.da_dxi) return p.da_dxi(x, xi);
  const double h = detail::kFdStep * std::max(1.0, std::abs(xi));
  NVec hi = p.a(x, xi + h), lo = p.a(x, xi - h);
  NVec out{};
  for (int i = 0; i < p.dim_x; ++i) out[i] = (hi[i] - lo[i]) / (2.0 * h);
  return out;
}

inline double eval_div_a(const Problem& p, const XVec& x, double xi) {
  double v;
  if (p.div_a) {
    v = p.div_a(x, xi);
  } else {
    v = 0.0;
    const double h = detail::kFdStep;
    for (int i = 0; i < p.dim_x; ++i) {
      XVec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      v += (p.a(xp, xi)[i] - p.a(xm, xi)[i]) / (2.0 * h);
    }
  }
  detail::require_finite(v, "div_x a", x, xi);
  return v;
}

inline double eval_g(const Problem& p, int k, const XVec& x, double xi) {
  return p.noise[k].g(x, xi);
}

inline double eval_dg_dxi(const Problem& p, int k, const XVec& x, double xi) {
  const auto& c = p.noise[k];
  if (c.dg_dxi) return c.dg_dxi(x, xi);
  const double h = detail::kFdStep * std::max(1.0, std::abs(xi));
  return (c.g(x, xi + h) - c.g(x, xi - h)) / (2.0 * h);
}

inline double eval_G2(const Problem& p, const XVec& x, double xi) {
  double s = 0.0;
  for (const auto& c : p.noise) {
    double g = c.g(x, xi);
    s += g * g;
  }
  detail::require_finite(s, "G^2", x, xi);
  return s;
}

inline double eval_dG2_dxi(const Problem& p, const XVec& x, double xi) {
  double s = 0.0;
  for (int k = 0; k < p.noise_dim(); ++k)
    s += 2.0 * eval_g(p, k, x, xi) * eval_dg_dxi(p, k, x, xi);
  detail::require_finite(s, "d(G^2)/dxi", x, xi);
  return s;
}

// Multiplies a and every g_k by the smooth mask Theta_R and updates the
// stored derivatives by the product rule. Lambda is untouched.
inline Problem truncate(const Problem& p, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("truncate: R > 0 required");
  Problem q = p;
  q.trunc_R = R;
  q.name = p.name.empty() ? "truncated" : p.name + "#R";

  auto a0 = p.a;
  q.a = [a0, R](const XVec& x, double xi) {
    NVec v = a0(x, xi);
    const double th = cutoff::theta_R(xi, R);
    for (auto& c : v) c *= th;
    return v;
  };
  if (p.da_dxi) {
    auto da0 = p.da_dxi;
    q.da_dxi = [a0, da0, R](const XVec& x, double xi) {
      NVec v = a0(x, xi), dv = da0(x, xi);
      const double th = cutoff::theta_R(xi, R);
      const double dth = cutoff::theta_R_deriv(xi, R);
      NVec out{};
      for (int i = 0; i < kMaxDim; ++i) out[i] = dv[i] * th + v[i] * dth;
      return out;
    };
  } else {
    q.da_dxi = nullptr;
  }
  if (p.div_a) {
    auto div0 = p.div_a;
    q.div_a = [div0, R](const XVec& x, double xi) { return div0(x, xi) * cutoff::theta_R(xi, R); };
  } else {
    q.div_a = nullptr;
  }
  q.noise.clear();
  for (const auto& c : p.noise) {
    NoiseComponent nc;
    auto g0 = c.g;
    nc.g = [g0, R](const XVec& x, double xi) { return g0(x, xi) * cutoff::theta_R(xi, R); };
    if (c.dg_dxi) {
      auto dg0 = c.dg_dxi;
      nc.dg_dxi = [g0, dg0, R](const XVec& x, double xi) {
        return dg0(x, xi) * cutoff::theta_R(xi, R) + g0(x, xi) * cutoff::theta_R_deriv(xi, R);
      };
    }
    q.noise.push_back(std::move(nc));
  }
  return q;
}

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  XVec worst_x{};
  double worst_xi = 0.0;
  double worst_value = 0.0;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  double fitted_G2_constant = 0.0;  // smallest C with G^2 <= C(1+xi^2) on samples
  bool used_finite_differences = false;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Sample-based check of every model assumption on a deterministic lattice of
// `samples` points per axis. Sign violations are reported, never thrown; a
// NaN/inf coefficient evaluation throws CoefficientError.
inline ValidationReport validate(const Problem& p, int samples) {
  if (samples < 2) throw std::invalid_argument("validate: samples >= 2 required");
  ValidationReport rep;
  rep.used_finite_differences = !p.div_a || [&] {
    for (const auto& c : p.noise)
      if (!c.dg_dxi) return true;
    return false;
  }();

  std::vector<XVec> xs;
  if (p.dim_x == 1) {
    for (int i = 0; i < samples; ++i) xs.push_back(make_x(static_cast<double>(i) / samples));
  } else {
    for (int i = 0; i < samples; ++i)
      for (int j = 0; j < samples; ++j)
        xs.push_back(make_x(static_cast<double>(i) / samples, static_cast<double>(j) / samples));
  }
  std::vector<double> xis(samples);
  for (int j = 0; j < samples; ++j)
    xis[j] = p.xi_min + (p.xi_max - p.xi_min) * (j + 0.5) / samples;

  AssumptionCheck lam{"lambda_nonpositive"};
  lam.worst_value = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    double v = p.lambda(x);
    detail::require_finite(v, "Lambda", x, 0.0);
    if (v > lam.worst_value) {
      lam.worst_value = v;
      lam.worst_x = x;
    }
  }
  lam.pass = lam.worst_value <= 0.0;
  rep.checks.push_back(lam);

  AssumptionCheck diva{"div_a_nonnegative"};
  diva.worst_value = std::numeric_limits<double>::infinity();
  for (const auto& x : xs)
    for (double xi : xis) {
      double v = eval_div_a(p, x, xi);
      if (v < diva.worst_value) {
        diva.worst_value = v;
        diva.worst_x = x;
        diva.worst_xi = xi;
      }
    }
  diva.pass = diva.worst_value >= -1e-7;
  rep.checks.push_back(diva);

  AssumptionCheck gzero{"g_vanishes_at_xi0"};
  for (int k = 0; k < p.noise_dim(); ++k)
    for (const auto& x : xs) {
      double v = std::abs(eval_g(p, k, x, 0.0));
      detail::require_finite(v, "g_k", x, 0.0);
      if (v > gzero.worst_value) {
        gzero.worst_value = v;
        gzero.worst_x = x;
      }
    }
  gzero.pass = gzero.worst_value <= 1e-12;
  rep.checks.push_back(gzero);

  AssumptionCheck g2b{"G2_quadratic_growth"};
  for (const auto& x : xs)
    for (double xi : xis) {
      double c = eval_G2(p, x, xi) / (1.0 + xi * xi);
      if (c > g2b.worst_value) {
        g2b.worst_value = c;
        g2b.worst_x = x;
        g2b.worst_xi = xi;
      }
    }
  rep.fitted_G2_constant = g2b.worst_value;
  g2b.pass = std::isfinite(g2b.worst_value);
  rep.checks.push_back(g2b);

  // trapezoid quadratures of the integrability displays over xi_domain
  const double dxi = (p.xi_max - p.xi_min) / (samples - 1);
  AssumptionCheck ia{"a_xi_integrable"};
  for (const auto& x : xs) {
    double q = 0.0;
    for (int j = 0; j < samples; ++j) {
      double xi = p.xi_min + j * dxi;
      NVec av = p.a(x, xi);
      for (int i = 0; i < p.dim_x; ++i) detail::require_finite(av[i], "a", x, xi);
      double w = (j == 0 || j == samples - 1) ? 0.5 : 1.0;
      for (int i = 0; i < p.dim_x; ++i) q += w * std::abs(xi * av[i]) * dxi;
    }
    if (q > ia.worst_value) {
      ia.worst_value = q;
      ia.worst_x = x;
    }
  }
  ia.pass = std::isfinite(ia.worst_value) && ia.worst_value < 1e12;
  rep.checks.push_back(ia);

  AssumptionCheck ig{"g_deriv_xi_integrable"};
  for (int k = 0; k < p.noise_dim(); ++k)
    for (const auto& x : xs) {
      double q = 0.0;
      for (int j = 0; j < samples; ++j) {
        double xi = p.xi_min + j * dxi;
        double d = eval_dg_dxi(p, k, x, xi);
        detail::require_finite(d, "dg_k/dxi", x, xi);
        double w = (j == 0 || j == samples - 1) ? 0.5 : 1.0;
        q += w * std::abs(xi * d) * dxi;
      }
      if (q > ig.worst_value) {
        ig.worst_value = q;
        ig.worst_x = x;
      }
    }
  ig.pass = std::isfinite(ig.worst_value) && ig.worst_value < 1e12;
  rep.checks.push_back(ig);

  return rep;
}

// ---------------------------------------------------------------------------
// Built-in problem library. The underlying paper has no numerical section, so
// these canonical cases anchor the test and acceptance suites.
// ---------------------------------------------------------------------------

struct PresetParams {
  double a_scale = 1.0;
  double lambda_const = -1.0;
  double sigma = 0.25;
  double trunc_R = 4.0;
  double xi_min = 0.0;  // 0,0 = use preset default domain
  double xi_max = 0.0;
};

// P0 free streaming, P1 deterministic high field, P2 noisy high field (d=1),
// P3 Burgers-like flux a(x,xi) = xi * Theta_R(xi).
inline Problem make_preset(const std::string& id, const PresetParams& prm = {}) {
  Problem p;
  p.dim_x = 1;
  p.name = id;
  const double s = prm.a_scale;

  auto gauss_a = [s](const XVec&, double xi) { return NVec{s * std::exp(-xi * xi), 0.0}; };
  auto gauss_da = [s](const XVec&, double xi) {
    return NVec{-2.0 * xi * s * std::exp(-xi * xi), 0.0};
  };
  auto zero_div = [](const XVec&, double) { return 0.0; };

  if (id == "P0") {
    p.a = gauss_a;
    p.da_dxi = gauss_da;
    p.div_a = zero_div;
    p.lambda = [](const XVec&) { return 0.0; };
    p.xi_min = -8.0;
    p.xi_max = 4.0;
  } else if (id == "P1") {
    p.a = gauss_a;
    p.da_dxi = gauss_da;
    p.div_a = zero_div;
    const double lc = prm.lambda_const;
    p.lambda = [lc](const XVec&) { return lc; };
    p.xi_min = -8.0;
    p.xi_max = 4.0;
  } else if (id == "P2") {
    p.a = gauss_a;
    p.da_dxi = gauss_da;
    p.div_a = zero_div;
    const double lc = prm.lambda_const;
    p.lambda = [lc](const XVec&) { return lc; };
    // only the noise needs the Theta_R mask: sin(xi) does not decay, while
    // the gaussian flux already satisfies the integrability displays
    const double sg = prm.sigma;
    const double R = prm.trunc_R;
    NoiseComponent nc;
    nc.g = [sg, R](const XVec& x, double xi) {
      return sg * std::sin(xi) * (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * x[0])) *
             cutoff::theta_R(xi, R);
    };
    nc.dg_dxi = [sg, R](const XVec& x, double xi) {
      const double amp = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * x[0]);
      return sg * amp *
             (std::cos(xi) * cutoff::theta_R(xi, R) +
              std::sin(xi) * cutoff::theta_R_deriv(xi, R));
    };
    p.noise.push_back(std::move(nc));
    p.trunc_R = R;
    p.xi_min = -8.0;
    p.xi_max = 4.0;
  } else if (id == "P3") {
    const double R = prm.trunc_R;
    p.a = [R](const XVec&, double xi) { return NVec{xi * cutoff::theta_R(xi, R), 0.0}; };
    p.da_dxi = [R](const XVec&, double xi) {
      return NVec{cutoff::theta_R(xi, R) + xi * cutoff::theta_R_deriv(xi, R), 0.0};
    };
    p.div_a = zero_div;
    p.lambda = [](const XVec&) { return 0.0; };
    p.trunc_R = R;
    p.xi_min = -6.0;
    p.xi_max = 6.0;
  } else {
    throw std::invalid_argument("make_preset: unknown preset '" + id + "' (P0..P3)");
  }

  if (prm.xi_min != 0.0 || prm.xi_max != 0.0) {
    p.xi_min = prm.xi_min;
    p.xi_max = prm.xi_max;
  }
  return p;
}

}  // namespace hfbgk
