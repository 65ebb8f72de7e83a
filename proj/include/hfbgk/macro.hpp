#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfbgk/coeffs.hpp"
#include "hfbgk/fields.hpp"
#include "hfbgk/grid.hpp"
#include "hfbgk/kinetic.hpp"
#include "hfbgk/wiener.hpp"

namespace hfbgk {

// Flux/noise provider for the finite-volume solver. Interface i sits at
// x = i*dx between cells i-1 and i (periodic). Built either from tabulated
// homogenized coefficients or injected directly (tests, classical fluxes).
struct MacroFlux {
  int d = 0;  // noise components
  double global_max_abs_b = 0.0;
  std::function<double(int, double)> B_iface;               // (iface, u)
  std::function<double(int, double, double)> max_b_iface;   // (iface, ulo, uhi)
  std::function<double(int, double)> B_center;              // (cell, u)
  std::function<double(int, int, double)> C_cell;           // (cell, k, u)
};

inline MacroFlux make_table_flux(const CoefficientTable& iface_table,
                                 const CoefficientTable& center_table) {
  MacroFlux f;
  f.d = center_table.d_noise;
  f.global_max_abs_b = iface_table.max_abs_b_global();
  f.B_iface = [&iface_table](int i, double u) { return iface_table.eval_B(i, u); };
  f.max_b_iface = [&iface_table](int i, double lo, double hi) {
    return iface_table.max_abs_b(i, lo, hi);
  };
  f.B_center = [&center_table](int i, double u) { return center_table.eval_B(i, u); };
  f.C_cell = [&center_table](int i, int k, double u) { return center_table.eval_C(i, k, u); };
  return f;
}

// Direct injection of an x-independent flux law (bypasses the coefficient
// tables; used by oracle tests against classical solutions).
inline MacroFlux make_callable_flux(std::function<double(double)> B,
                                    std::function<double(double)> b_abs_bound,
                                    std::function<double(double)> C1 = nullptr) {
  MacroFlux f;
  f.d = C1 ? 1 : 0;
  f.global_max_abs_b = 0.0;  // caller-provided bound used per interface instead
  f.B_iface = [B](int, double u) { return B(u); };
  f.max_b_iface = [b_abs_bound](int, double lo, double hi) {
    return std::max(b_abs_bound(lo), b_abs_bound(hi));
  };
  f.B_center = [B](int, double u) { return B(u); };
  if (C1)
    f.C_cell = [C1](int, int, double u) { return C1(u); };
  else
    f.C_cell = [](int, int, double) { return 0.0; };
  return f;
}

// One conservative step: Rusanov interface fluxes (local wave speed = max |b|
// over the cell pair's value range), then Euler-Maruyama noise
// u_i += sum_k C_k(x_i, u_i) dW_k in the Ito sense.
inline MacroField fv_step(const MacroField& u, const MacroFlux& flux, double dt,
                          const std::vector<double>& dW) {
  const int nx = u.x_grid.n;
  const double dx = u.x_grid.dx;
  if (flux.global_max_abs_b * dt > dx * (1.0 + 1e-9))
    throw ConfigError("fv_step: CFL violated, max|b| dt > dx");
  std::vector<double> f(nx + 1);
  for (int i = 0; i <= nx; ++i) {
    const int im = u.x_grid.wrap(i - 1);
    const int ip = u.x_grid.wrap(i);
    const double ul = u.u[im], ur = u.u[ip];
    const int iface = i % nx;
    const double alpha = flux.max_b_iface(iface, std::min(ul, ur), std::max(ul, ur));
    f[i] = 0.5 * (flux.B_iface(iface, ul) + flux.B_iface(iface, ur)) - 0.5 * alpha * (ur - ul);
  }
  MacroField out = u;
  out.t = u.t + dt;
  for (int i = 0; i < nx; ++i) out.u[i] = u.u[i] - dt / dx * (f[i + 1] - f[i]);
  if (flux.d > 0 && !dW.empty()) {
    for (int i = 0; i < nx; ++i) {
      double g = 0.0;
      for (int k = 0; k < flux.d && k < static_cast<int>(dW.size()); ++k)
        g += flux.C_cell(i, k, out.u[i]) * dW[k];
      out.u[i] += g;
    }
  }
  return out;
}

struct MacroTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // u at every step, including t=0
  TorusGrid x_grid;
  double dt = 0.0;

  const std::vector<double>& final_state() const { return states.back(); }
};

// Pathwise integration of du + div_x B dt = C dW; deterministic function of
// (flux, u0, path).
inline MacroTrajectory run_macro(const MacroFlux& flux, const MacroField& u0, double T, double dt,
                                 const WienerPath& path) {
  const int n_steps = static_cast<int>(std::lround(T / dt));
  if (n_steps < 1 || std::abs(n_steps * dt - T) > 1e-9 * std::max(T, 1.0))
    throw ConfigError("run_macro: dt must divide T");
  int span = 0;
  if (flux.d > 0) {
    const double h = path.dt();
    span = static_cast<int>(std::lround(dt / h));
    if (h <= 0.0 || std::abs(span * h - dt) > 1e-9 * dt || span < 1)
      throw ConfigError("run_macro: dt must span whole path steps");
  }
  MacroTrajectory traj;
  traj.x_grid = u0.x_grid;
  traj.dt = dt;
  MacroField u = u0;
  traj.times.push_back(u.t);
  traj.states.push_back(u.u);
  for (int n = 0; n < n_steps; ++n) {
    std::vector<double> dW;
    if (flux.d > 0) {
      dW.assign(path.d, 0.0);
      for (int k = 0; k < path.d; ++k)
        dW[k] = path.value((n + 1) * span, k) - path.value(n * span, k);
    }
    u = fv_step(u, flux, dt, dW);
    if (!all_finite(u.u))
      throw std::runtime_error("run_macro: NaN detected at step " + std::to_string(n + 1));
    traj.times.push_back(u.t);
    traj.states.push_back(u.u);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Kruzhkov entropy statistic
// ---------------------------------------------------------------------------

// Smooth space-time test function phi(t,x) >= 0 vanishing at t = 0 and t = T;
// the xi-dependence of the general test family collapses after the cutoff
// limit, so presets are xi-independent.
struct TestFunctionTX {
  std::string id;
  std::function<double(double, double)> phi;
  std::function<double(double, double)> dphi_dt;
  std::function<double(double, double)> dphi_dx;
};

inline TestFunctionTX make_phi_preset(const std::string& id, double T) {
  auto beta = [T](double t) {
    const double s = 2.0 * t / T - 1.0;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 / (s * s - 1.0));
  };
  auto dbeta = [T, beta](double t) {
    const double s = 2.0 * t / T - 1.0;
    if (std::abs(s) >= 1.0) return 0.0;
    const double q = s * s - 1.0;
    return beta(t) * (-2.0 * s / (q * q)) * (2.0 / T);
  };
  const double two_pi = 2.0 * std::numbers::pi;
  TestFunctionTX f;
  f.id = id;
  if (id == "bump" || id == "bump_x050") {
    f.phi = [=](double t, double x) { return beta(t) * (1.0 + std::cos(two_pi * (x - 0.5))); };
    f.dphi_dt = [=](double t, double x) { return dbeta(t) * (1.0 + std::cos(two_pi * (x - 0.5))); };
    f.dphi_dx = [=](double t, double x) { return -beta(t) * two_pi * std::sin(two_pi * (x - 0.5)); };
  } else if (id == "bump_x025") {
    f.phi = [=](double t, double x) { return beta(t) * (1.0 + std::cos(two_pi * (x - 0.25))); };
    f.dphi_dt = [=](double t, double x) { return dbeta(t) * (1.0 + std::cos(two_pi * (x - 0.25))); };
    f.dphi_dx = [=](double t, double x) { return -beta(t) * two_pi * std::sin(two_pi * (x - 0.25)); };
  } else if (id == "tbump") {
    f.phi = [=](double t, double) { return beta(t); };
    f.dphi_dt = [=](double t, double) { return dbeta(t); };
    f.dphi_dx = [](double, double) { return 0.0; };
  } else {
    throw std::invalid_argument("make_phi_preset: unknown preset '" + id + "'");
  }
  return f;
}

inline double sgn0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// The four discretized integrals of the entropy inequality, stored in the
// residual orientation: total ~ <d_t|u-k| + div_x(sgn (B(u)-B(k))) + ..., phi>,
// which is nonpositive up to O(dx+dt) for admissible noise-free solutions and
// pathwise bounded by a phi-dependent constant in the stochastic case.
struct EntropyStatistic {
  double k = 0.0;
  std::string phi_id;
  std::uint64_t seed = 0;
  double term_time = 0.0;   // -int |u-k| d_t phi
  double term_flux = 0.0;   // -int sgn(u-k)(B(x,u)-B(x,k)) d_x phi
  double term_div = 0.0;    // -int div_x B(x,k) sgn(u-k) phi
  double term_noise = 0.0;  // +sum sgn(u-k) C(x,u) dW phi
  double total = 0.0;
};

// Midpoint-in-(t,x) discretization; u is sampled at the left step endpoint so
// the noise term is an Ito sum (martingale, mean zero over realizations).
inline EntropyStatistic kruzhkov_statistic(const MacroTrajectory& traj, const MacroFlux& flux,
                                           double k, const TestFunctionTX& phi,
                                           const WienerPath& path) {
  const int n_steps = static_cast<int>(traj.states.size()) - 1;
  const int nx = traj.x_grid.n;
  const double dx = traj.x_grid.dx;
  const double dt = traj.dt;
  int span = 0;
  if (flux.d > 0) {
    const double h = path.dt();
    span = static_cast<int>(std::lround(dt / h));
    if (h <= 0.0 || std::abs(span * h - dt) > 1e-9 * dt || span < 1)
      throw ConfigError("kruzhkov_statistic: trajectory grid misaligned with path");
  }
  EntropyStatistic st;
  st.k = k;
  st.phi_id = phi.id;
  st.seed = path.seed;
  for (int n = 0; n < n_steps; ++n) {
    const double tm = traj.times[n] + 0.5 * dt;
    const auto& u = traj.states[n];
    for (int i = 0; i < nx; ++i) {
      const double x = traj.x_grid.center(i);
      const double s = sgn0(u[i] - k);
      const double Bu = flux.B_center(i, u[i]);
      const double Bk = flux.B_center(i, k);
      const int iface_r = (i + 1) % nx;
      const double divBk = (flux.B_iface(iface_r, k) - flux.B_iface(i, k)) / dx;
      st.term_time -= std::abs(u[i] - k) * phi.dphi_dt(tm, x) * dt * dx;
      st.term_flux -= s * (Bu - Bk) * phi.dphi_dx(tm, x) * dt * dx;
      st.term_div -= divBk * s * phi.phi(tm, x) * dt * dx;
      if (flux.d > 0) {
        for (int kk = 0; kk < flux.d && kk < path.d; ++kk) {
          const double dW = path.value((n + 1) * span, kk) - path.value(n * span, kk);
          st.term_noise += s * flux.C_cell(i, kk, u[i]) * dW * phi.phi(tm, x) * dx;
        }
      }
    }
  }
  st.total = st.term_time + st.term_flux + st.term_div + st.term_noise;
  return st;
}

}  // namespace hfbgk
