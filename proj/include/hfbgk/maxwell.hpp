#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hfbgk/fields.hpp"
#include "hfbgk/grid.hpp"
#include "hfbgk/problem.hpp"

namespace hfbgk {

// Modified Maxwellian M_k for state k at a point with Lambda(x) = lambda_x:
// the bounded solution of M + Lambda * dM/dxi = 1_{k > xi}.
// Closed form (lambda = -lambda_x > 0):
//   M_k(xi) = 1 - exp(-(k - xi)/lambda)  for xi < k,   0 otherwise;
// Lambda = 0 degenerates to the plain indicator (handled exactly, not as a
// limit). Confirmed against maxwellian_oracle below.
inline double maxwellian(double k, double lambda_x, double xi) {
  if (lambda_x > 0.0) throw std::domain_error("maxwellian: lambda_x must be <= 0");
  if (xi >= k) return 0.0;
  if (lambda_x == 0.0) return 1.0;
  return 1.0 - std::exp((xi - k) / (-lambda_x));
}

// Brute-force quadrature of the defining integral
//   M_k(xi) = int_0^inf 1_{k > xi - Lambda u} e^{-u} du
// truncated at u <= 50, composite trapezoid with n_quad panels. The indicator
// switches at u* = (k - xi)/lambda; the quadrature integrates e^{-u} up to
// min(u*, 50) so panels never straddle the jump.
inline double maxwellian_oracle(double k, double lambda_x, double xi, int n_quad) {
  if (lambda_x > 0.0) throw std::domain_error("maxwellian_oracle: lambda_x must be <= 0");
  if (n_quad < 100) throw std::invalid_argument("maxwellian_oracle: n_quad >= 100 required");
  const double u_cap = 50.0;
  double b;
  if (lambda_x == 0.0) {
    if (xi >= k) return 0.0;
    b = u_cap;
  } else {
    const double u_star = (k - xi) / (-lambda_x);
    if (u_star <= 0.0) return 0.0;
    b = std::min(u_star, u_cap);
  }
  const double h = b / n_quad;
  double s = 0.5 * (1.0 + std::exp(-b));
  for (int i = 1; i < n_quad; ++i) s += std::exp(-i * h);
  return s * h;
}

// Max over interior grid centers, excluding the stencil cells around the kink
// at xi = k, of |M + Lambda dM/dxi - 1_{k>xi}| with centered differences.
inline double maxwellian_residual(double k, double lambda_x, const XiGrid& g) {
  double worst = 0.0;
  for (int j = 1; j + 1 < g.n; ++j) {
    const double xi = g.center(j);
    if (std::abs(xi - k) <= g.dxi * (1.0 + 1e-9)) continue;  // kink cells
    const double m = maxwellian(k, lambda_x, xi);
    const double dm = (maxwellian(k, lambda_x, g.center(j + 1)) -
                       maxwellian(k, lambda_x, g.center(j - 1))) /
                      (2.0 * g.dxi);
    const double ind = xi < k ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(m + lambda_x * dm - ind));
  }
  return worst;
}

// Trapezoid quadrature of int |M_k - M_k2| dxi; the identity says this equals
// |k - k2| independently of Lambda.
inline double l1_distance(double k, double k2, double lambda_x, const XiGrid& g) {
  const double lam = -lambda_x;
  const double lo_need = std::min(k, k2) - 40.0 * lam - 1.0;
  const double hi_need = std::max(k, k2) + 1.0;
  if (g.xi_min > lo_need || g.xi_max < hi_need)
    throw std::invalid_argument("l1_distance: grid does not cover the effective support");
  double s = 0.0;
  for (int j = 0; j <= g.n; ++j) {
    const double xi = g.xi_min + j * g.dxi;
    const double v = std::abs(maxwellian(k, lambda_x, xi) - maxwellian(k2, lambda_x, xi));
    s += (j == 0 || j == g.n) ? 0.5 * v : v;
  }
  return s * g.dxi;
}

// Midpoint quadrature of int (M_k - 1_{0>xi}) dxi over the grid. For constant
// Lambda the closed form integrates to k + Lambda (not the k one might
// expect); callers must not renormalize, only report.
inline double maxwellian_mass(double k, double lambda_x, const XiGrid& g) {
  double s = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double lo = g.cell_lo(j), hi = g.cell_hi(j);
    double ind0;
    if (hi <= 0.0)
      ind0 = 1.0;
    else if (lo >= 0.0)
      ind0 = 0.0;
    else
      ind0 = (0.0 - lo) / (hi - lo);
    s += (maxwellian(k, lambda_x, g.center(j)) - ind0) * g.dxi;
  }
  return s;
}

// Exact mean of M_k over a cell [lo, hi], from the closed-form antiderivative.
inline double maxwellian_cell_average(double k, double lambda_x, double lo, double hi) {
  if (lambda_x > 0.0) throw std::domain_error("maxwellian_cell_average: lambda_x must be <= 0");
  if (lo >= k) return 0.0;
  const double width = hi - lo;
  const double h = std::min(hi, k);
  if (lambda_x == 0.0) return (h - lo) / width;
  const double lam = -lambda_x;
  // int_lo^h (1 - e^{-(k-xi)/lam}) dxi
  const double val = (h - lo) - lam * (std::exp(-(k - h) / lam) - std::exp(-(k - lo) / lam));
  return val / width;
}

// Exact mean of 1_{u > xi} over a cell.
inline double indicator_cell_average(double u, double cell_lo, double cell_hi) {
  if (cell_hi <= u) return 1.0;
  if (cell_lo >= u) return 0.0;
  return (u - cell_lo) / (cell_hi - cell_lo);
}

// Grid density of the kinetic defect measure m_eps, split into its
// relaxation part (1/eps) int_{xi_min}^{xi} (1_{u>zeta} - F) dzeta and field
// part (-Lambda(x)) F. Cumulative sums start at xi_min, the grid proxy for
// -infinity.
struct DefectField {
  double eps = 1.0;
  double t = 0.0;
  TorusGrid x_grid;
  XiGrid xi_grid;
  std::vector<double> relaxation;
  std::vector<double> field;
  std::vector<double> total;

  double min_total() const {
    double m = 0.0;
    for (double v : total) m = std::min(m, v);
    return m;
  }
  double total_mass() const {
    double s = 0.0;
    for (double v : total) s += v;
    return s * x_grid.dx * xi_grid.dxi;
  }
};

inline DefectField defect_measure(const KineticField& F, const Problem& problem, double eps) {
  const int nx = F.x_grid.n, nxi = F.xi_grid.n;
  DefectField m;
  m.eps = eps;
  m.t = F.t;
  m.x_grid = F.x_grid;
  m.xi_grid = F.xi_grid;
  m.relaxation.assign(static_cast<std::size_t>(nx) * nxi, 0.0);
  m.field.assign(static_cast<std::size_t>(nx) * nxi, 0.0);
  m.total.assign(static_cast<std::size_t>(nx) * nxi, 0.0);
  const double dxi = F.xi_grid.dxi;
  for (int i = 0; i < nx; ++i) {
    const XVec x = make_x(F.x_grid.center(i));
    const double neg_lambda = -problem.lambda(x);
    // local density of row i
    double u = 0.0;
    for (int j = 0; j < nxi; ++j)
      u += (F.at(i, j) - indicator_cell_average(0.0, F.xi_grid.cell_lo(j), F.xi_grid.cell_hi(j))) *
           dxi;
    double cum = 0.0;
    for (int j = 0; j < nxi; ++j) {
      const double chi = indicator_cell_average(u, F.xi_grid.cell_lo(j), F.xi_grid.cell_hi(j));
      cum += (chi - F.at(i, j)) * dxi;
      const std::size_t idx = static_cast<std::size_t>(i) * nxi + j;
      m.relaxation[idx] = cum / eps;
      m.field[idx] = neg_lambda * F.at(i, j);
      m.total[idx] = m.relaxation[idx] + m.field[idx];
    }
  }
  return m;
}

}  // namespace hfbgk
