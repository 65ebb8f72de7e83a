#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hfbgk {

// Spatial dimension is 1 or 2; points and N-vectors use a fixed-size array
// with the first dim_x entries meaningful.
inline constexpr int kMaxDim = 2;
using XVec = std::array<double, kMaxDim>;
using NVec = std::array<double, kMaxDim>;

inline XVec make_x(double x0, double x1 = 0.0) { return {x0, x1}; }

// Wrap a coordinate onto the unit torus [0,1).
inline double torus_wrap(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w -= 1.0;  // guards x = -1e-17 rounding up
  return w;
}

inline XVec torus_wrap(XVec x, int dim) {
  for (int i = 0; i < dim; ++i) x[i] = torus_wrap(x[i]);
  return x;
}

// Uniform cell grid on the unit torus: Nx cells, centers at (i+1/2)dx.
struct TorusGrid {
  int n = 0;
  double dx = 0.0;

  TorusGrid() = default;
  explicit TorusGrid(int n_cells) : n(n_cells), dx(1.0 / n_cells) {
    if (n_cells <= 0) throw std::invalid_argument("TorusGrid: n_cells must be positive");
  }
  double center(int i) const { return (i + 0.5) * dx; }
  double iface(int i) const { return i * dx; }  // left face of cell i
  int wrap(int i) const {
    int m = i % n;
    return m < 0 ? m + n : m;
  }
};

// Uniform cell grid on a velocity interval [xi_min, xi_max].
struct XiGrid {
  int n = 0;
  double xi_min = 0.0;
  double xi_max = 0.0;
  double dxi = 0.0;

  XiGrid() = default;
  XiGrid(double lo, double hi, int n_cells)
      : n(n_cells), xi_min(lo), xi_max(hi), dxi((hi - lo) / n_cells) {
    if (n_cells <= 0 || !(hi > lo))
      throw std::invalid_argument("XiGrid: need xi_max > xi_min and n_cells > 0");
  }
  double center(int j) const { return xi_min + (j + 0.5) * dxi; }
  double cell_lo(int j) const { return xi_min + j * dxi; }
  double cell_hi(int j) const { return xi_min + (j + 1) * dxi; }
};

inline double l1_norm(const std::vector<double>& v, double cell_measure) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s * cell_measure;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b,
                          double cell_measure) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * cell_measure;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace hfbgk
