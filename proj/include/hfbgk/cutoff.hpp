#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace hfbgk {

// Smooth compactly supported cutoff Theta with Theta = 1 on |s| <= 1/2 and
// Theta = 0 on |s| >= 1, built from the normalized exp(1/(t^2-1)) bump.
// Theta_R(xi) = Theta(xi/R) masks coefficients outside |xi| ~ R.
namespace cutoff {

// Unnormalized bump on (-1,1).
inline double bump_raw(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  return std::exp(1.0 / (t * t - 1.0));
}

namespace detail {

// Cumulative integral of the bump on [-1,1], tabulated once on a fine grid
// (composite Simpson per panel) and evaluated by cubic Hermite using the
// exact integrand as derivative.
struct BumpCdfTable {
  static constexpr int kPanels = 8192;
  std::vector<double> cum;   // cum[i] = integral_{-1}^{t_i} bump_raw
  std::vector<double> val;   // bump_raw(t_i)
  double h;
  double total;

  BumpCdfTable() : cum(kPanels + 1), val(kPanels + 1), h(2.0 / kPanels) {
    cum[0] = 0.0;
    val[0] = 0.0;
    for (int i = 1; i <= kPanels; ++i) {
      double a = -1.0 + (i - 1) * h;
      double b = -1.0 + i * h;
      double m = 0.5 * (a + b);
      val[i] = bump_raw(b);
      cum[i] = cum[i - 1] + (h / 6.0) * (val[i - 1] + 4.0 * bump_raw(m) + val[i]);
    }
    total = cum[kPanels];
  }

  // integral_{-1}^{t} bump_raw, t in [-1,1]
  double eval(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return total;
    double s = (t + 1.0) / h;
    int i = static_cast<int>(s);
    if (i >= kPanels) i = kPanels - 1;
    double u = (s - i) * h;  // offset from node i
    // cubic Hermite on [t_i, t_{i+1}] with exact endpoint derivatives
    double p0 = cum[i], p1 = cum[i + 1];
    double d0 = val[i], d1 = val[i + 1];
    double w = u / h;
    double w2 = w * w, w3 = w2 * w;
    return p0 * (2 * w3 - 3 * w2 + 1) + d0 * h * (w3 - 2 * w2 + w) +
           p1 * (-2 * w3 + 3 * w2) + d1 * h * (w3 - w2);
  }
};

inline const BumpCdfTable& bump_cdf_table() {
  static const BumpCdfTable table;
  return table;
}

}  // namespace detail

// Normalized bump: integrates to 1 over (-1,1).
inline double bump(double t) { return bump_raw(t) / detail::bump_cdf_table().total; }

// CDF of the normalized bump: 0 at t<=-1, 1 at t>=1.
inline double bump_cdf(double t) {
  const auto& tab = detail::bump_cdf_table();
  return tab.eval(t) / tab.total;
}

// Theta(s): C^inf monotone, 1 on |s| <= 1/2, 0 on |s| >= 1.
// Bridge region maps |s| in [1/2,1] to t = 4|s|-3 in [-1,1].
inline double theta(double s) {
  double a = std::abs(s);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  return 1.0 - bump_cdf(4.0 * a - 3.0);
}

inline double theta_deriv(double s) {
  double a = std::abs(s);
  if (a <= 0.5 || a >= 1.0) return 0.0;
  double d = -4.0 * bump(4.0 * a - 3.0);
  return s < 0.0 ? -d : d;
}

inline double theta_R(double xi, double R) { return theta(xi / R); }

inline double theta_R_deriv(double xi, double R) { return theta_deriv(xi / R) / R; }

}  // namespace cutoff
}  // namespace hfbgk
