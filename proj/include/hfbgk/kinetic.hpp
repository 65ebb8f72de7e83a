#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfbgk/fields.hpp"
#include "hfbgk/grid.hpp"
#include "hfbgk/maxwell.hpp"
#include "hfbgk/problem.hpp"
#include "hfbgk/wiener.hpp"

namespace hfbgk {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State of one stochastic characteristic: velocity component phi0, torus
// position phi, and the Jacobian weight eta = exp(-int div_x a). eta stays 1
// whenever div_x a vanishes (which periodicity forces for smooth admissible a).
struct CharState {
  double phi0 = 0.0;
  XVec phi{};
  double eta = 1.0;
  bool exited_xi = false;
};

enum class CharDirection { forward, backward };

namespace detail {

inline double xi_drift(const Problem& p, double eps, const XVec& x, double xi) {
  double v = p.lambda(x) / eps;
  if (p.has_noise()) v -= 0.25 * eval_dG2_dxi(p, x, xi);
  return v;
}

}  // namespace detail

// One Heun (explicit trapezoidal) update of the Stratonovich characteristic
// system over [t, t+dt]; dt must span whole path steps and the consumed noise
// is the net increment over them. `forward` maps the state at t to t+dt;
// `backward` maps the state at t+dt to the foot at t by integrating the
// time-reversed system with reversed increments (the inverse flow).
inline CharState characteristics_step(const CharState& state, const Problem& p, double eps,
                                      double t, double dt, const WienerPath& path,
                                      CharDirection dir) {
  if (dt == 0.0) return state;  // S(s,s) = Id
  const int d = p.noise_dim();
  std::vector<double> dW(d, 0.0);
  if (d > 0) {
    if (path.d < d) throw ConfigError("characteristics_step: path has fewer components than noise");
    const double h = path.dt();
    if (h <= 0.0) throw ConfigError("characteristics_step: empty path");
    const double s0 = t / h, s1 = (t + dt) / h;
    const int n0 = static_cast<int>(std::lround(s0));
    const int n1 = static_cast<int>(std::lround(s1));
    if (std::abs(s0 - n0) > 1e-9 || std::abs(s1 - n1) > 1e-9 || n1 <= n0 || n0 < 0 ||
        n1 > path.steps())
      throw ConfigError("characteristics_step: [t, t+dt] not aligned with path grid");
    for (int k = 0; k < d; ++k) dW[k] = path.value(n1, k) - path.value(n0, k);
  }

  const double sgn = (dir == CharDirection::forward) ? 1.0 : -1.0;
  const double hdt = sgn * dt;

  // predictor
  const double f0 = detail::xi_drift(p, eps, state.phi, state.phi0);
  NVec a0 = p.a(state.phi, state.phi0);
  double g0 = 0.0;
  std::vector<double> g0k(d);
  for (int k = 0; k < d; ++k) {
    g0k[k] = eval_g(p, k, state.phi, state.phi0);
    g0 += g0k[k] * sgn * dW[k];
  }
  CharState pred = state;
  pred.phi0 = state.phi0 + hdt * f0 + g0;
  for (int i = 0; i < p.dim_x; ++i) pred.phi[i] = state.phi[i] + hdt * a0[i];
  pred.phi = torus_wrap(pred.phi, p.dim_x);

  // corrector: trapezoidal average of endpoint coefficients
  const double f1 = detail::xi_drift(p, eps, pred.phi, pred.phi0);
  NVec a1 = p.a(pred.phi, pred.phi0);
  double g1 = 0.0;
  for (int k = 0; k < d; ++k) g1 += eval_g(p, k, pred.phi, pred.phi0) * sgn * dW[k];

  CharState out = state;
  out.phi0 = state.phi0 + 0.5 * hdt * (f0 + f1) + 0.5 * (g0 + g1);
  for (int i = 0; i < p.dim_x; ++i) out.phi[i] = state.phi[i] + 0.5 * hdt * (a0[i] + a1[i]);
  out.phi = torus_wrap(out.phi, p.dim_x);

  // eta by the exact exponential of the trapezoidal average of -div_x a,
  // accumulated along the traversed characteristic arc
  const double div_avg = 0.5 * (eval_div_a(p, state.phi, state.phi0) +
                                eval_div_a(p, out.phi, out.phi0));
  out.eta = state.eta * std::exp(-dt * div_avg);

  if (out.phi0 < p.xi_min || out.phi0 > p.xi_max) out.exited_xi = true;
  return out;
}

namespace detail {

// Saturated boundary profile in xi: 1 below the domain, 0 above.
inline double padded_value(const KineticField& F, int i, int j) {
  if (j < 0) return 1.0;
  if (j >= F.xi_grid.n) return 0.0;
  return F.at(i, j);
}

// Cubic Lagrange weights through nodes at offsets {-1,0,1,2}.
inline std::array<double, 4> cubic_weights(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t * t - 1.0) * (t - 2.0) / 2.0,
          -t * (t + 1.0) * (t - 2.0) / 2.0, t * (t * t - 1.0) / 6.0};
}

// Bicubic interpolation at a characteristic foot, clipped to the [min,max]
// of the four surrounding cell values so transport cannot create new extrema.
inline double interp_bicubic_clipped(const KineticField& F, double fx, double fxi) {
  const auto& xg = F.x_grid;
  const auto& vg = F.xi_grid;
  const double gx = fx / xg.dx - 0.5;
  double gj = (fxi - vg.xi_min) / vg.dxi - 0.5;
  const int i0 = static_cast<int>(std::floor(gx));
  const int j0 = static_cast<int>(std::floor(gj));
  const double tx = gx - i0;
  const double tj = gj - j0;
  const auto wx = cubic_weights(tx);
  const auto wj = cubic_weights(tj);
  double v = 0.0;
  for (int a = -1; a <= 2; ++a) {
    const int i = xg.wrap(i0 + a);
    double row = 0.0;
    for (int b = -1; b <= 2; ++b) row += wj[b + 1] * padded_value(F, i, j0 + b);
    v += wx[a + 1] * row;
  }
  double lo = 1.0, hi = 0.0;
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b <= 1; ++b) {
      const double c = padded_value(F, xg.wrap(i0 + a), j0 + b);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  return std::clamp(v, lo, hi);
}

}  // namespace detail

struct TransportStats {
  int exits = 0;       // feet outside [xi_min, xi_max], served by the profile
  int deep_exits = 0;  // feet more than one cell outside; these gate the error
  int nodes = 0;
};

// Semi-Lagrangian transport over [t, t+dt]: every grid node traces its
// characteristic backward, evaluates F at the foot (bicubic, clipped), and
// scales by the accumulated Jacobian weight. Feet outside the xi-domain take
// the saturated profile and are counted as domain exits.
inline KineticField transport_step(const KineticField& F, const Problem& p, double t, double dt,
                                   const WienerPath& path, TransportStats* stats = nullptr) {
  if (p.dim_x != 1)
    throw ConfigError("transport_step: the grid solver supports dim_x = 1");
  if (dt == 0.0) return F;
  KineticField out = F;
  out.t = F.t + dt;
  const int nx = F.x_grid.n, nxi = F.xi_grid.n;
  int exits = 0, deep_exits = 0;
  for (int i = 0; i < nx; ++i) {
    const double xi_c = F.x_grid.center(i);
    for (int j = 0; j < nxi; ++j) {
      CharState s;
      s.phi = make_x(xi_c);
      s.phi0 = F.xi_grid.center(j);
      CharState foot = characteristics_step(s, p, F.eps, t, dt, path, CharDirection::backward);
      const double weight = foot.eta;  // exp(-int div_x a) along the arc
      double value;
      if (foot.phi0 < F.xi_grid.xi_min) {
        value = 1.0;
        ++exits;
        if (foot.phi0 < F.xi_grid.xi_min - F.xi_grid.dxi) ++deep_exits;
      } else if (foot.phi0 > F.xi_grid.xi_max) {
        value = 0.0;
        ++exits;
        if (foot.phi0 > F.xi_grid.xi_max + F.xi_grid.dxi) ++deep_exits;
      } else {
        value = detail::interp_bicubic_clipped(F, foot.phi[0], foot.phi0);
      }
      out.at(i, j) = weight * value;
    }
  }
  if (stats) {
    stats->exits += exits;
    stats->deep_exits += deep_exits;
    stats->nodes += nx * nxi;
  }
  // feet within one cell of the boundary are covered seamlessly by the
  // saturated profile; only deeper escapes indicate an undersized domain
  if (deep_exits > 0.01 * nx * nxi)
    throw ConfigError("transport_step: over 1% of characteristic feet left [xi_min, xi_max] in "
                      "one step; enlarge the velocity domain");
  return out;
}

// Local density u[i] = dxi * sum_j (F[i][j] - cell average of 1_{0>xi}).
inline MacroField local_density(const KineticField& F) {
  MacroField u(F.x_grid, 0.0, F.t);
  const int nxi = F.xi_grid.n;
  for (int i = 0; i < F.x_grid.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < nxi; ++j)
      s += F.at(i, j) -
           indicator_cell_average(0.0, F.xi_grid.cell_lo(j), F.xi_grid.cell_hi(j));
    u.u[i] = s * F.xi_grid.dxi;
  }
  return u;
}

// One-step frozen-u Duhamel relaxation:
//   F <- e^{-dt/eps} F + (1 - e^{-dt/eps}) * cell_average(1_{level > xi})
// where level = local density + level_offset[i]. With a zero offset this is
// the plain BGK update and conserves the local density exactly (the target
// indicator carries the same density as F).
inline KineticField relax_step(const KineticField& F, double dt,
                               const std::vector<double>& level_offset = {}) {
  if (!level_offset.empty() && static_cast<int>(level_offset.size()) != F.x_grid.n)
    throw std::invalid_argument("relax_step: level_offset size mismatch");
  KineticField out = F;
  const double w = std::exp(-dt / F.eps);
  MacroField u = local_density(F);
  const int nxi = F.xi_grid.n;
  for (int i = 0; i < F.x_grid.n; ++i) {
    const double level = u.u[i] + (level_offset.empty() ? 0.0 : level_offset[i]);
    for (int j = 0; j < nxi; ++j) {
      const double chi =
          indicator_cell_average(level, F.xi_grid.cell_lo(j), F.xi_grid.cell_hi(j));
      out.at(i, j) = w * F.at(i, j) + (1.0 - w) * chi;
    }
  }
  return out;
}

// Relaxation-level convention for the split scheme. `bgk_raw` targets the
// indicator at the local density, the literal BGK right-hand side; with a
// high-field term this loses density at rate Lambda/eps through the xi-drift
// and the density diverges as eps -> 0. `field_balanced` raises the target
// level by -Lambda(x) * r/(1-e^{-r}) (r = dt/eps) so the relaxation gain
// cancels the transport loss exactly step by step; the discrete steady state
// is then the modified-Maxwellian profile and the shifted density converges.
enum class RelaxTarget { bgk_raw, field_balanced };

struct KineticRunOptions {
  RelaxTarget relax_target = RelaxTarget::field_balanced;
  int observer_stride = 1;
  bool track_defect = true;
  std::function<void(int, const KineticField&)> on_observe;  // (step, field)
};

struct KineticTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> density_raw;  // raw convention: int f dxi
  std::vector<double> defect_min;
  std::vector<double> defect_mass;
  KineticField final_field;
  TransportStats transport_stats;
  // per-step relaxation density diagnostics (max over run):
  double max_relax_density_change = 0.0;    // |u_after - u_before|
  double max_relax_balance_residual = 0.0;  // |u_after - u_before - (1-e^{-r}) * offset|
  // monitor (not enforced) of the a-priori bound: sup over observed (t,x) of
  // int |xi| |F - 1_{0>xi}| dxi
  double sup_weighted_density = 0.0;
};

// Lie splitting: semi-Lagrangian transport along the stochastic
// characteristics, then exact exponential relaxation. All randomness comes
// from `path`; the trajectory is a pure function of (problem, config, path).
inline KineticTrajectory run_kinetic_on(const Problem& p, double eps, const MacroField& u0,
                                        double T, double dt, const WienerPath& path,
                                        const XiGrid& vg, const KineticRunOptions& opt = {}) {
  if (eps <= 0.0) throw ConfigError("run_kinetic: eps > 0 required");
  if (dt <= 0.0 || T <= 0.0) throw ConfigError("run_kinetic: T, dt > 0 required");
  const int n_steps = static_cast<int>(std::lround(T / dt));
  if (n_steps < 1 || std::abs(n_steps * dt - T) > 1e-9 * std::max(T, 1.0))
    throw ConfigError("run_kinetic: dt must divide T");
  if (p.has_noise()) {
    const double h = path.dt();
    if (h <= 0.0 || std::abs(std::lround(dt / h) * h - dt) > 1e-9 * dt)
      throw ConfigError("run_kinetic: dt must span whole path steps");
  }

  // CFL-type admissibility: x-displacement within a cell and xi-drift within
  // the domain margin per step
  double a_max = 0.0, lam_max = 0.0;
  for (int i = 0; i < 17; ++i) {
    const XVec x = make_x(i / 17.0);
    lam_max = std::max(lam_max, std::abs(p.lambda(x)));
    for (int j = 0; j <= 64; ++j) {
      const double xi = vg.xi_min + (vg.xi_max - vg.xi_min) * j / 64.0;
      a_max = std::max(a_max, std::abs(p.a(x, xi)[0]));
    }
  }
  if (a_max * dt > u0.x_grid.dx * (1.0 + 1e-9))
    throw ConfigError("run_kinetic: CFL violated, max|a| dt > dx");
  const double margin = 0.25 * (vg.xi_max - vg.xi_min);
  if (lam_max / eps * dt > margin)
    throw ConfigError("run_kinetic: high-field CFL violated, (|Lambda|/eps) dt exceeds the "
                      "xi-domain margin");

  KineticField F(eps, u0.x_grid, vg);
  for (int i = 0; i < u0.x_grid.n; ++i)
    for (int j = 0; j < vg.n; ++j)
      F.at(i, j) = indicator_cell_average(u0.u[i], vg.cell_lo(j), vg.cell_hi(j));

  // relaxation level offsets (zero for the raw BGK target)
  const double r = dt / eps;
  const double balance_gain = 1.0 - std::exp(-r);
  std::vector<double> offset(u0.x_grid.n, 0.0);
  if (opt.relax_target == RelaxTarget::field_balanced) {
    for (int i = 0; i < u0.x_grid.n; ++i) {
      const double lam = p.lambda(make_x(u0.x_grid.center(i)));
      offset[i] = -lam * r / balance_gain;
    }
  }

  KineticTrajectory traj;
  auto observe = [&](int step) {
    traj.times.push_back(F.t);
    traj.density_raw.push_back(local_density(F).u);
    for (int i = 0; i < u0.x_grid.n; ++i) {
      double w = 0.0;
      for (int j = 0; j < vg.n; ++j) {
        const double ind0 = indicator_cell_average(0.0, vg.cell_lo(j), vg.cell_hi(j));
        w += std::abs(vg.center(j)) * std::abs(F.at(i, j) - ind0) * vg.dxi;
      }
      traj.sup_weighted_density = std::max(traj.sup_weighted_density, w);
    }
    if (opt.track_defect) {
      DefectField m = defect_measure(F, p, eps);
      traj.defect_min.push_back(m.min_total());
      traj.defect_mass.push_back(m.total_mass());
    }
    if (opt.on_observe) opt.on_observe(step, F);
  };
  observe(0);

  for (int n = 0; n < n_steps; ++n) {
    const double t = n * dt;
    F = transport_step(F, p, t, dt, path, &traj.transport_stats);
    MacroField u_pre = local_density(F);
    F = relax_step(F, dt, offset);
    MacroField u_post = local_density(F);
    for (int i = 0; i < u0.x_grid.n; ++i) {
      const double change = u_post.u[i] - u_pre.u[i];
      traj.max_relax_density_change =
          std::max(traj.max_relax_density_change, std::abs(change));
      traj.max_relax_balance_residual = std::max(
          traj.max_relax_balance_residual, std::abs(change - balance_gain * offset[i]));
    }
    if (!all_finite(u_post.u))
      throw std::runtime_error("run_kinetic: NaN detected at step " + std::to_string(n + 1));
    if ((n + 1) % opt.observer_stride == 0 || n + 1 == n_steps) observe(n + 1);
  }
  traj.final_field = F;
  return traj;
}

// Convenience overload: velocity grid with 2*Nx cells on [xi_min, xi_max].
inline KineticTrajectory run_kinetic(const Problem& p, double eps, const MacroField& u0, double T,
                                     double dt, const WienerPath& path,
                                     const KineticRunOptions& opt = {}) {
  XiGrid vg(p.xi_min, p.xi_max, 2 * u0.x_grid.n);
  return run_kinetic_on(p, eps, u0, T, dt, path, vg, opt);
}

struct SemigroupReport {
  double l1_initial = 0.0;
  double l1_transported = 0.0;     // after one-leg transport over [s,t]
  double contraction_excess = 0.0; // max(0, growth beyond 1) relative
  double composition_gap = 0.0;    // L1 between one-leg and two-leg transport
};

// Properties of the discrete solution operator: L1 contraction (unit operator
// norm) and the semigroup composition law, measured with the relaxation off.
inline SemigroupReport semigroup_checks(const Problem& p, double eps, const KineticField& X0,
                                        double s, double mid, double t, const WienerPath& path) {
  SemigroupReport rep;
  const double cell = X0.x_grid.dx * X0.xi_grid.dxi;
  rep.l1_initial = l1_norm(X0.values, cell);
  KineticField one = transport_step(X0, p, s, t - s, path);
  rep.l1_transported = l1_norm(one.values, cell);
  rep.contraction_excess =
      std::max(0.0, (rep.l1_transported - rep.l1_initial) / std::max(rep.l1_initial, 1e-300));
  KineticField leg1 = transport_step(X0, p, s, mid - s, path);
  KineticField two = transport_step(leg1, p, mid, t - mid, path);
  rep.composition_gap = l1_distance(one.values, two.values, cell);
  return rep;
}

// Transport over [s, t] composed from legs of length h (one Heun update and
// one resampling per leg).
inline KineticField transport_composed(const KineticField& X0, const Problem& p, double s,
                                       double t, double h, const WienerPath& path) {
  const int n = static_cast<int>(std::lround((t - s) / h));
  if (n < 1 || std::abs(n * h - (t - s)) > 1e-9)
    throw ConfigError("transport_composed: h must divide t - s");
  KineticField F = X0;
  for (int k = 0; k < n; ++k) F = transport_step(F, p, s + k * h, h, path);
  return F;
}

// Self-convergence of the composed transport: L1 distance between the leg-h
// and leg-h/2 compositions of S(t,s). Shrinks ~linearly in h for d <= 1 noise.
inline double composition_refinement_gap(const Problem& p, double eps, const KineticField& X0,
                                         double s, double t, double h, const WienerPath& path) {
  (void)eps;
  KineticField coarse = transport_composed(X0, p, s, t, h, path);
  KineticField fine = transport_composed(X0, p, s, t, 0.5 * h, path);
  return l1_distance(coarse.values, fine.values, X0.x_grid.dx * X0.xi_grid.dxi);
}

}  // namespace hfbgk
