#pragma once

#include <vector>

#include "hfbgk/grid.hpp"

namespace hfbgk {

// Cell averages of the macroscopic state u(t,x) on the periodic torus.
struct MacroField {
  TorusGrid x_grid;
  std::vector<double> u;
  double t = 0.0;

  MacroField() = default;
  MacroField(TorusGrid g, double value = 0.0, double time = 0.0)
      : x_grid(g), u(g.n, value), t(time) {}
};

// Cell averages of F_eps on torus x truncated velocity interval, x-major.
// The stored field carries the saturated far-field convention: F = 1 below
// xi_min and F = 0 above xi_max.
struct KineticField {
  double eps = 1.0;
  double t = 0.0;
  TorusGrid x_grid;
  XiGrid xi_grid;
  std::vector<double> values;

  KineticField() = default;
  KineticField(double eps_, TorusGrid xg, XiGrid vg, double t_ = 0.0)
      : eps(eps_), t(t_), x_grid(xg), xi_grid(vg),
        values(static_cast<std::size_t>(xg.n) * vg.n, 0.0) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * xi_grid.n + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * xi_grid.n + j]; }
};

}  // namespace hfbgk
