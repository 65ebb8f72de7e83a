#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hfbgk {

// Counter-based Gaussian draws: every variate is a pure function of
// (seed, component, counter, level), so paths are reproducible across
// machines and refinement levels without carrying generator state.
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t component, std::uint64_t counter,
                         std::uint64_t level) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (component * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ (counter * 0xa0761d6478bd642fULL));
  h = mix64(h ^ (level * 0xe7037ed1a0b428dbULL));
  return h;
}

// Uniform in the open interval (0,1).
inline double u01(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

// One standard normal via Box-Muller on two decorrelated halves of the key.
inline double standard_normal(std::uint64_t seed, std::uint64_t component, std::uint64_t counter,
                              std::uint64_t level) {
  std::uint64_t h1 = key(seed, component, counter, level);
  std::uint64_t h2 = mix64(h1 ^ 0x5851f42d4c957f2dULL);
  double u1 = u01(h1);
  double u2 = u01(h2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

// One realization of the d-dimensional driving Wiener process W(t) on a
// refinable uniform grid. values are node states (values[0] = 0); increments
// are differences of consecutive nodes. Refinement inserts Brownian-bridge
// nodes and never touches existing ones.
struct WienerPath {
  int d = 0;
  std::uint64_t seed = 0;
  int level = 0;
  std::vector<double> t_grid;  // size M+1, t_grid[0]=0
  std::vector<double> values;  // flat (M+1) x d, node-major

  int steps() const { return static_cast<int>(t_grid.size()) - 1; }
  double t_end() const { return t_grid.back(); }
  double dt() const { return steps() > 0 ? t_grid[1] - t_grid[0] : 0.0; }
  double value(int node, int component) const { return values[static_cast<std::size_t>(node) * d + component]; }
};

inline WienerPath sample_path(std::uint64_t seed, int d, double T, int M) {
  if (M < 1) throw std::invalid_argument("sample_path: M >= 1 required");
  if (T <= 0.0) throw std::invalid_argument("sample_path: T > 0 required");
  if (d < 0) throw std::invalid_argument("sample_path: d >= 0 required");
  WienerPath p;
  p.d = d;
  p.seed = seed;
  p.level = 0;
  p.t_grid.resize(M + 1);
  for (int n = 0; n <= M; ++n) p.t_grid[n] = T * static_cast<double>(n) / M;
  p.values.assign(static_cast<std::size_t>(M + 1) * d, 0.0);
  const double sqrt_dt = std::sqrt(T / M);
  for (int n = 0; n < M; ++n)
    for (int k = 0; k < d; ++k) {
      double dW = sqrt_dt * rng::standard_normal(seed, static_cast<std::uint64_t>(k),
                                                 static_cast<std::uint64_t>(n), 0);
      p.values[static_cast<std::size_t>(n + 1) * d + k] =
          p.values[static_cast<std::size_t>(n) * d + k] + dW;
    }
  return p;
}

// Brownian-bridge refinement: inserts (factor-1) interior nodes per interval,
// sampled left-to-right conditioned on the last inserted node and the right
// endpoint. Original nodes are copied bit-exactly. Draws are keyed by
// (seed, component, global index in the refined grid, level+1).
inline WienerPath refine(const WienerPath& p, int factor) {
  if (factor < 2) throw std::invalid_argument("refine: factor >= 2 required");
  const int M = p.steps();
  const int Mf = M * factor;
  WienerPath q;
  q.d = p.d;
  q.seed = p.seed;
  q.level = p.level + 1;
  q.t_grid.resize(Mf + 1);
  q.values.assign(static_cast<std::size_t>(Mf + 1) * p.d, 0.0);
  const double T = p.t_end();
  for (int n = 0; n <= Mf; ++n) q.t_grid[n] = T * static_cast<double>(n) / Mf;
  // keep coarse nodes
  for (int n = 0; n <= M; ++n) {
    q.t_grid[static_cast<std::size_t>(n) * factor] = p.t_grid[n];
    for (int k = 0; k < p.d; ++k)
      q.values[(static_cast<std::size_t>(n) * factor) * p.d + k] = p.value(n, k);
  }
  for (int n = 0; n < M; ++n) {
    const double tR = p.t_grid[n + 1];
    for (int j = 1; j < factor; ++j) {
      const int idx = n * factor + j;
      const double tL = q.t_grid[idx - 1];
      const double tm = q.t_grid[idx];
      const double var = (tm - tL) * (tR - tm) / (tR - tL);
      const double sd = std::sqrt(var);
      const double frac = (tm - tL) / (tR - tL);
      for (int k = 0; k < p.d; ++k) {
        const double wL = q.values[static_cast<std::size_t>(idx - 1) * p.d + k];
        const double wR = p.value(n + 1, k);
        const double z = rng::standard_normal(q.seed, static_cast<std::uint64_t>(k),
                                              static_cast<std::uint64_t>(idx),
                                              static_cast<std::uint64_t>(q.level));
        q.values[static_cast<std::size_t>(idx) * p.d + k] = wL + frac * (wR - wL) + sd * z;
      }
    }
  }
  return q;
}

// Stored increment over path step n.
inline std::vector<double> increment(const WienerPath& p, int n) {
  if (n < 0 || n >= p.steps()) throw std::out_of_range("increment: step index out of range");
  std::vector<double> dW(p.d);
  for (int k = 0; k < p.d; ++k) dW[k] = p.value(n + 1, k) - p.value(n, k);
  return dW;
}

// Linear interpolation between grid nodes; diagnostic only, solvers consume
// whole-step increments.
inline std::vector<double> evaluate(const WienerPath& p, double t) {
  if (t < 0.0 || t > p.t_end() * (1.0 + 1e-12))
    throw std::out_of_range("evaluate: time outside [0,T]");
  t = std::min(t, p.t_end());
  const int M = p.steps();
  const double s = t / p.t_end() * M;
  int n = static_cast<int>(s);
  if (n >= M) n = M - 1;
  const double w = (t - p.t_grid[n]) / (p.t_grid[n + 1] - p.t_grid[n]);
  std::vector<double> out(p.d);
  for (int k = 0; k < p.d; ++k) out[k] = (1.0 - w) * p.value(n, k) + w * p.value(n + 1, k);
  return out;
}

// True when every node of `coarse` appears bit-identically in `fine`
// (fine.steps must be an integer multiple of coarse.steps).
inline bool shares_coarse_nodes(const WienerPath& coarse, const WienerPath& fine) {
  if (coarse.d != fine.d) return false;
  if (fine.steps() % coarse.steps() != 0) return false;
  const int r = fine.steps() / coarse.steps();
  for (int n = 0; n <= coarse.steps(); ++n)
    for (int k = 0; k < coarse.d; ++k)
      if (coarse.value(n, k) != fine.value(n * r, k)) return false;
  return true;
}

}  // namespace hfbgk
