#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "hfbgk/grid.hpp"
#include "hfbgk/maxwell.hpp"
#include "hfbgk/problem.hpp"

namespace hfbgk {

// Gauss-Laguerre rule for int_0^inf f(v) e^{-v} dv, computed by Golub-Welsch
// on the Laguerre Jacobi matrix (diag 2j+1, offdiag j) with an implicit-QL
// tridiagonal eigensolver that carries first-row eigenvector components.
struct LaguerreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline LaguerreRule compute_gauss_laguerre(int n) {
  std::vector<double> d(n), e(n), z(n, 0.0);
  for (int j = 0; j < n; ++j) d[j] = 2.0 * j + 1.0;
  for (int j = 0; j + 1 < n; ++j) e[j] = static_cast<double>(j + 1);
  z[0] = 1.0;

  const double eps = 2.3e-16;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    while (true) {
      int m;
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) throw std::runtime_error("gauss_laguerre: QL failed to converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (int i = m - 1; i >= l; --i) {
        double f = s * e[i];
        double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = (i >= l);
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        f = z[i + 1];
        z[i + 1] = s * z[i] + c * f;
        z[i] = c * z[i] - s * f;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return d[i] < d[j]; });
  LaguerreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = d[order[i]];
    rule.weights[i] = z[order[i]] * z[order[i]];  // mu0 = int e^{-v} dv = 1
  }
  return rule;
}

}  // namespace detail

inline const LaguerreRule& gauss_laguerre(int n) {
  if (n < 4 || n > 256) throw std::invalid_argument("gauss_laguerre: order must be in [4,256]");
  static std::map<int, LaguerreRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_laguerre(n)).first;
  return it->second;
}

// b solves b - Lambda db/dxi = a; bounded solution is the exponential average
// b(x,xi) = int_0^inf a(x, xi + v Lambda(x)) e^{-v} dv.
inline NVec b_coeff(const Problem& p, const XVec& x, double xi, int n_laguerre = 64) {
  const double lam = p.lambda(x);
  if (lam == 0.0) return p.a(x, xi);
  const auto& rule = gauss_laguerre(n_laguerre);
  NVec out{};
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    NVec av = p.a(x, xi + rule.nodes[q] * lam);
    for (int i = 0; i < p.dim_x; ++i) out[i] += rule.weights[q] * av[i];
  }
  return out;
}

// Same exponential average with integrand dg_k/dxi; c solves
// c - Lambda dc/dxi = dg_k/dxi.
inline double c_coeff(const Problem& p, int k, const XVec& x, double xi, int n_laguerre = 64) {
  const double lam = p.lambda(x);
  if (lam == 0.0) return eval_dg_dxi(p, k, x, xi);
  const auto& rule = gauss_laguerre(n_laguerre);
  double out = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    out += rule.weights[q] * eval_dg_dxi(p, k, x, xi + rule.nodes[q] * lam);
  return out;
}

// Finite-difference check that b solves its defining equation:
// |b - Lambda (b(xi+h)-b(xi-h))/(2h) - a(x,xi)|, max over components.
inline double residual_b(const Problem& p, const XVec& x, double xi, double h,
                         int n_laguerre = 64) {
  if (!(h > 0.0)) throw std::invalid_argument("residual_b: h > 0 required");
  const double lam = p.lambda(x);
  NVec b0 = b_coeff(p, x, xi, n_laguerre);
  NVec bp = b_coeff(p, x, xi + h, n_laguerre);
  NVec bm = b_coeff(p, x, xi - h, n_laguerre);
  NVec a0 = p.a(x, xi);
  double worst = 0.0;
  for (int i = 0; i < p.dim_x; ++i) {
    double db = (bp[i] - bm[i]) / (2.0 * h);
    worst = std::max(worst, std::abs(b0[i] - lam * db - a0[i]));
  }
  return worst;
}

namespace detail {

// trapezoid of f over [lo, hi] with n panels
template <class F>
double trapezoid(F&& f, double lo, double hi, int n) {
  if (hi <= lo) return 0.0;
  const double h = (hi - lo) / n;
  double s = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) s += f(lo + i * h);
  return s * h;
}

// exponential-fit estimate of |int_{-inf}^{lo} f| from samples at lo, lo+delta
inline double tail_estimate(double f_lo, double f_lo_d, double delta) {
  const double a0 = std::abs(f_lo), a1 = std::abs(f_lo_d);
  if (a0 < 1e-300) return 0.0;
  if (a1 <= a0) return a0;  // cannot resolve a decay rate; report one unit of the edge value
  const double rate = std::log(a1 / a0) / delta;
  return a0 / rate;
}

}  // namespace detail

struct FluxResult {
  NVec value{};
  double tail_estimate = 0.0;   // |int_{-inf}^{xi_min} integrand| estimate
  double quad_error_est = 0.0;  // Richardson estimate from panel halving
};

// B(x,u) = int_{xi_min}^{u} b(x,xi) dxi, trapezoid over n_xi panels with the
// lower limit -inf replaced by xi_min (tail reported, not silently dropped).
inline FluxResult flux_B(const Problem& p, const XVec& x, double u, int n_laguerre = 64,
                         int n_xi = 4000) {
  if (u < p.xi_min || u > p.xi_max) throw std::domain_error("flux_B: u outside [xi_min, xi_max]");
  FluxResult res;
  for (int i = 0; i < p.dim_x; ++i) {
    auto bi = [&](double xi) { return b_coeff(p, x, xi, n_laguerre)[i]; };
    const double fine = detail::trapezoid(bi, p.xi_min, u, n_xi);
    const double coarse = detail::trapezoid(bi, p.xi_min, u, std::max(1, n_xi / 2));
    res.value[i] = fine;
    res.quad_error_est = std::max(res.quad_error_est, std::abs(fine - coarse) / 3.0);
    const double delta = 0.5;
    res.tail_estimate = std::max(
        res.tail_estimate, detail::tail_estimate(bi(p.xi_min), bi(p.xi_min + delta), delta));
  }
  return res;
}

struct Flux1Result {
  double value = 0.0;
  double tail_estimate = 0.0;
  double quad_error_est = 0.0;
};

// C_k(x,u) = int_{xi_min}^{u} c_k(x,xi) dxi.
inline Flux1Result noise_C(const Problem& p, int k, const XVec& x, double u, int n_laguerre = 64,
                           int n_xi = 4000) {
  if (u < p.xi_min || u > p.xi_max) throw std::domain_error("noise_C: u outside [xi_min, xi_max]");
  auto ck = [&](double xi) { return c_coeff(p, k, x, xi, n_laguerre); };
  Flux1Result res;
  const double fine = detail::trapezoid(ck, p.xi_min, u, n_xi);
  const double coarse = detail::trapezoid(ck, p.xi_min, u, std::max(1, n_xi / 2));
  res.value = fine;
  res.quad_error_est = std::abs(fine - coarse) / 3.0;
  const double delta = 0.5;
  res.tail_estimate = detail::tail_estimate(ck(p.xi_min), ck(p.xi_min + delta), delta);
  return res;
}

struct PropIvResult {
  NVec lhs{};  // int a M_k dxi
  NVec rhs{};  // B(x,k)
  double gap = 0.0;
};

// Cross-check of the identity int a(x,xi) M_k(x,xi) dxi = B(x,k); both sides
// computed by independent quadrature routes. The left side pairs midpoint
// values of a with exact cell averages of M_k, which keeps the kink at
// xi = k from polluting the comparison.
inline PropIvResult check_prop_iv(const Problem& p, const XVec& x, double k_val,
                                  const XiGrid& g, int n_laguerre = 64, int n_xi = 20000) {
  const double lam = -p.lambda(x);
  if (g.xi_min > k_val - 40.0 * lam - 1.0 || g.xi_max < k_val + 1.0)
    throw std::invalid_argument("check_prop_iv: grid does not cover the effective support");
  PropIvResult res;
  const double lambda_x = p.lambda(x);
  for (int j = 0; j < g.n; ++j) {
    const double m = maxwellian_cell_average(k_val, lambda_x, g.cell_lo(j), g.cell_hi(j));
    NVec av = p.a(x, g.center(j));
    for (int i = 0; i < p.dim_x; ++i) res.lhs[i] += av[i] * m * g.dxi;
  }
  Problem q = p;
  q.xi_min = g.xi_min;  // integrate B from the same lower edge
  q.xi_max = std::max(p.xi_max, k_val);
  FluxResult B = flux_B(q, x, k_val, n_laguerre, n_xi);
  res.rhs = B.value;
  for (int i = 0; i < p.dim_x; ++i) res.gap = std::max(res.gap, std::abs(res.lhs[i] - res.rhs[i]));
  return res;
}

// ---------------------------------------------------------------------------
// Monotone cubic Hermite interpolation (Fritsch-Carlson) used by the
// coefficient table below.
// ---------------------------------------------------------------------------
namespace detail {

inline std::vector<double> monotone_slopes(const std::vector<double>& y, double du) {
  const int n = static_cast<int>(y.size());
  std::vector<double> m(n, 0.0);
  if (n < 2) return m;
  std::vector<double> d(n - 1);
  for (int i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / du;
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (int i = 1; i + 1 < n; ++i)
    m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  for (int i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      m[i] = 0.0;
      m[i + 1] = 0.0;
      continue;
    }
    const double alpha = m[i] / d[i];
    const double beta = m[i + 1] / d[i];
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m[i] = tau * alpha * d[i];
      m[i + 1] = tau * beta * d[i];
    }
  }
  return m;
}

inline double hermite_eval(double y0, double y1, double m0, double m1, double h, double w) {
  const double w2 = w * w, w3 = w2 * w;
  return y0 * (2 * w3 - 3 * w2 + 1) + m0 * h * (w3 - 2 * w2 + w) + y1 * (-2 * w3 + 3 * w2) +
         m1 * h * (w3 - w2);
}

inline double hermite_deriv(double y0, double y1, double m0, double m1, double h, double w) {
  const double w2 = w * w;
  return (y0 * (6 * w2 - 6 * w) + m0 * h * (3 * w2 - 4 * w + 1) + y1 * (-6 * w2 + 6 * w) +
          m1 * h * (3 * w2 - 2 * w)) /
         h;
}

}  // namespace detail

// Tabulated B(x,u) and C_k(x,u) on an x-point list and uniform u-grid, with
// monotone cubic interpolation in u. The macro solver queries B per interface
// per step; recomputing the quadratures inside the time loop would dominate
// the runtime.
struct CoefficientTable {
  std::vector<double> x_points;
  std::vector<double> u_grid;  // uniform ascending
  int dim = 1;
  int d_noise = 0;
  int n_laguerre = 64;
  double quad_error_est = 0.0;
  double tail_estimate = 0.0;
  // B and slopes: [(ix*Nu + iu)*dim + comp]; C and slopes: [((k*nx)+ix)*Nu + iu]
  std::vector<double> B_val, B_slope;
  std::vector<double> C_val, C_slope;

  int nu() const { return static_cast<int>(u_grid.size()); }
  double du() const { return u_grid[1] - u_grid[0]; }
  double u_lo() const { return u_grid.front(); }
  double u_hi() const { return u_grid.back(); }

  std::pair<int, double> locate(double u) const {
    if (u < u_lo() - 1e-12 || u > u_hi() + 1e-12)
      throw std::domain_error("CoefficientTable: u outside tabulated range");
    double s = (u - u_lo()) / du();
    int i = static_cast<int>(s);
    if (i >= nu() - 1) i = nu() - 2;
    return {i, s - i};
  }

  double eval_B(int ix, double u, int comp = 0) const {
    auto [i, w] = locate(u);
    const std::size_t base = (static_cast<std::size_t>(ix) * nu() + i) * dim + comp;
    const std::size_t next = (static_cast<std::size_t>(ix) * nu() + i + 1) * dim + comp;
    return detail::hermite_eval(B_val[base], B_val[next], B_slope[base], B_slope[next], du(), w);
  }

  // b = dB/du at (x_ix, u)
  double eval_b(int ix, double u, int comp = 0) const {
    auto [i, w] = locate(u);
    const std::size_t base = (static_cast<std::size_t>(ix) * nu() + i) * dim + comp;
    const std::size_t next = (static_cast<std::size_t>(ix) * nu() + i + 1) * dim + comp;
    return detail::hermite_deriv(B_val[base], B_val[next], B_slope[base], B_slope[next], du(), w);
  }

  double eval_C(int ix, int k, double u) const {
    auto [i, w] = locate(u);
    const std::size_t base =
        (static_cast<std::size_t>(k) * x_points.size() + ix) * nu() + i;
    return detail::hermite_eval(C_val[base], C_val[base + 1], C_slope[base], C_slope[base + 1],
                                du(), w);
  }

  // wave-speed bound over the value range [ulo, uhi] at x_ix
  double max_abs_b(int ix, double ulo, double uhi, int comp = 0) const {
    if (ulo > uhi) std::swap(ulo, uhi);
    double worst = std::max(std::abs(eval_b(ix, ulo, comp)), std::abs(eval_b(ix, uhi, comp)));
    auto [i0, w0] = locate(ulo);
    auto [i1, w1] = locate(uhi);
    for (int i = i0; i <= i1 + 1 && i < nu(); ++i) {
      const std::size_t idx = (static_cast<std::size_t>(ix) * nu() + i) * dim + comp;
      worst = std::max(worst, std::abs(B_slope[idx]));
    }
    return worst;
  }

  double max_abs_b_global(int comp = 0) const {
    double worst = 0.0;
    for (double s : B_slope) worst = std::max(worst, std::abs(s));
    (void)comp;
    return worst;
  }
};

// Builds the table by one cumulative-trapezoid sweep of b (and c_k) per
// x-point: n_sub quadrature panels per u-cell plus the [xi_min, u_0] run-up.
inline CoefficientTable build_coefficient_table(const Problem& p,
                                                const std::vector<double>& x_points,
                                                const std::vector<double>& u_grid,
                                                int n_laguerre = 64, int n_sub = 8) {
  if (u_grid.size() < 2) throw std::invalid_argument("coefficient table: need >= 2 u points");
  if (u_grid.front() < p.xi_min || u_grid.back() > p.xi_max)
    throw std::domain_error("coefficient table: u_grid outside [xi_min, xi_max]");
  CoefficientTable t;
  t.x_points = x_points;
  t.u_grid = u_grid;
  t.dim = p.dim_x;
  t.d_noise = p.noise_dim();
  t.n_laguerre = n_laguerre;
  const int nx = static_cast<int>(x_points.size());
  const int nu = static_cast<int>(u_grid.size());
  t.B_val.assign(static_cast<std::size_t>(nx) * nu * p.dim_x, 0.0);
  t.B_slope.assign(t.B_val.size(), 0.0);
  t.C_val.assign(static_cast<std::size_t>(p.noise_dim()) * nx * nu, 0.0);
  t.C_slope.assign(t.C_val.size(), 0.0);

  const double du = u_grid[1] - u_grid[0];
  for (int ix = 0; ix < nx; ++ix) {
    const XVec x = make_x(x_points[ix]);
    for (int comp = 0; comp < p.dim_x; ++comp) {
      auto bi = [&](double xi) { return b_coeff(p, x, xi, n_laguerre)[comp]; };
      // run-up from xi_min to the first u node
      const int n_run = std::max(2, static_cast<int>((u_grid[0] - p.xi_min) / du) * n_sub);
      double acc = detail::trapezoid(bi, p.xi_min, u_grid[0], n_run);
      std::vector<double> col(nu);
      col[0] = acc;
      for (int iu = 1; iu < nu; ++iu) {
        acc += detail::trapezoid(bi, u_grid[iu - 1], u_grid[iu], n_sub);
        col[iu] = acc;
      }
      auto slopes = detail::monotone_slopes(col, du);
      for (int iu = 0; iu < nu; ++iu) {
        const std::size_t idx = (static_cast<std::size_t>(ix) * nu + iu) * p.dim_x + comp;
        t.B_val[idx] = col[iu];
        t.B_slope[idx] = slopes[iu];
      }
      const double delta = 0.5;
      t.tail_estimate = std::max(
          t.tail_estimate, detail::tail_estimate(bi(p.xi_min), bi(p.xi_min + delta), delta));
      const double coarse = detail::trapezoid(bi, p.xi_min, u_grid[0], std::max(1, n_run / 2));
      t.quad_error_est = std::max(t.quad_error_est, std::abs(col[0] - coarse) / 3.0);
    }
    for (int k = 0; k < p.noise_dim(); ++k) {
      auto ck = [&](double xi) { return c_coeff(p, k, x, xi, n_laguerre); };
      const int n_run = std::max(2, static_cast<int>((u_grid[0] - p.xi_min) / du) * n_sub);
      double acc = detail::trapezoid(ck, p.xi_min, u_grid[0], n_run);
      std::vector<double> col(nu);
      col[0] = acc;
      for (int iu = 1; iu < nu; ++iu) {
        acc += detail::trapezoid(ck, u_grid[iu - 1], u_grid[iu], n_sub);
        col[iu] = acc;
      }
      auto slopes = detail::monotone_slopes(col, du);
      for (int iu = 0; iu < nu; ++iu) {
        const std::size_t idx = (static_cast<std::size_t>(k) * nx + ix) * nu + iu;
        t.C_val[idx] = col[iu];
        t.C_slope[idx] = slopes[iu];
      }
    }
  }
  return t;
}

}  // namespace hfbgk
