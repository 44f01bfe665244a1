#pragma once

// Explicit predictable integrands on step paths. values[k] is the weight
// applied to the increment x[k] - x[k-1]; it only reads data at indices
// strictly below k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbdg/path.hpp"
#include "pbdg/young.hpp"

namespace pbdg {

enum class IntegrandKind { Davis, Continuous, BdgH, BdgG };

struct IntegrandTrack {
  std::vector<double> values;
  IntegrandKind kind = IntegrandKind::Davis;
};

namespace detail {

// Value at k-1 with X(0-) = 0.
inline double left(std::span<const double> v, std::size_t k) { return k == 0 ? 0.0 : v[k - 1]; }

inline double ratio00(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace detail

/// H[k] = x[k-1] / sqrt(qv[k-1] + runmax[k-1]^2), with 0/0 = 0.
inline IntegrandTrack davis(std::span<const double> x, const PathFunctionals& f) {
  IntegrandTrack h{std::vector<double>(x.size(), 0.0), IntegrandKind::Davis};
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double m = f.runmax[k - 1];
    h.values[k] = detail::ratio00(x[k - 1], std::sqrt(f.qv[k - 1] + m * m));
  }
  return h;
}

/// K[k] = 2 x[k-1] / max(sqrt(qv[k-1]), runmax[k-1]), with 0/0 = 0.
inline IntegrandTrack continuous_davis(std::span<const double> x, const PathFunctionals& f) {
  IntegrandTrack h{std::vector<double>(x.size(), 0.0), IntegrandKind::Continuous};
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double den = std::max(std::sqrt(f.qv[k - 1]), f.runmax[k - 1]);
    h.values[k] = detail::ratio00(2.0 * x[k - 1], den);
  }
  return h;
}

/// Kernel F^(s)_t between grid indices s < t, built from left limits:
///
///   (x[t-1] - x[s-1]) / sqrt(qv[t-1] - qv[s-1] + max_{s<=u<t} (x[u] - x[s-1])^2)
///
/// Zero when s >= t or when the denominator vanishes.
inline double kernel_F(std::span<const double> x, const PathFunctionals& f,
                       std::size_t s_idx, std::size_t t_idx) {
  if (t_idx >= x.size() || s_idx >= x.size()) {
    throw std::out_of_range("kernel_F: index out of range");
  }
  if (s_idx >= t_idx) return 0.0;
  const double base = detail::left(x, s_idx);
  double sup2 = 0.0;
  for (std::size_t u = s_idx; u < t_idx; ++u) {
    const double d = x[u] - base;
    sup2 = std::max(sup2, d * d);
  }
  const double dq = std::max(f.qv[t_idx - 1] - f.qv_left[s_idx], 0.0);
  return detail::ratio00(x[t_idx - 1] - base, std::sqrt(dq + sup2));
}

namespace detail {

// Accumulates p F^(j)_k dphi_j over j < k into H and G. A positive window
// restricts j to k - window <= j.
inline std::pair<IntegrandTrack, IntegrandTrack> bdg_accumulate(std::span<const double> x,
                                                                const PathFunctionals& f,
                                                                const YoungFunction& yf,
                                                                std::size_t window) {
  const std::size_t n = x.size();
  IntegrandTrack h{std::vector<double>(n, 0.0), IntegrandKind::BdgH};
  IntegrandTrack g{std::vector<double>(n, 0.0), IntegrandKind::BdgG};
  const double p = yf.exponent();

  // Atoms of d phi(sqrt[X]) and d phi(X*) at each index, including the mass
  // at index 0 coming from X(0-) = 0.
  std::vector<double> dh(n), dg(n);
  double prev_h = 0.0, prev_g = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ph = yf.phi(std::sqrt(f.qv[j]));
    const double pg = yf.phi(f.runmax[j]);
    dh[j] = p * (ph - prev_h);
    dg[j] = p * (pg - prev_g);
    prev_h = ph;
    prev_g = pg;
  }

  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (dh[j] == 0.0 && dg[j] == 0.0) continue;
    const double base = left(x, j);
    const double q0 = f.qv_left[j];
    const std::size_t stop = window == 0 ? n : std::min(n, j + window + 1);
    double sup2 = 0.0;
    for (std::size_t k = j + 1; k < stop; ++k) {
      const double d = x[k - 1] - base;
      sup2 = std::max(sup2, d * d);
      const double dq = std::max(f.qv[k - 1] - q0, 0.0);
      const double F = ratio00(d, std::sqrt(dq + sup2));
      h.values[k] += F * dh[j];
      g.values[k] += F * dg[j];
    }
  }
  return {std::move(h), std::move(g)};
}

}  // namespace detail

/// H[k] = sum_{j<k} p F^(j)_k (phi(sqrt qv[j]) - phi(sqrt qv[j-1])) and
/// G[k] = sum_{j<k} p F^(j)_k (phi(runmax[j]) - phi(runmax[j-1])).
/// Exact, O(n^2).
inline std::pair<IntegrandTrack, IntegrandTrack> bdg_pair(std::span<const double> x,
                                                          const PathFunctionals& f,
                                                          const YoungFunction& yf) {
  return detail::bdg_accumulate(x, f, yf, 0);
}

/// Truncated variant keeping only atoms within `window` indices of k.
/// O(n * window); not exact, never used for certificates.
inline std::pair<IntegrandTrack, IntegrandTrack> bdg_pair_windowed(std::span<const double> x,
                                                                   const PathFunctionals& f,
                                                                   const YoungFunction& yf,
                                                                   std::size_t window) {
  if (window == 0) throw std::invalid_argument("bdg_pair_windowed: window must be positive");
  return detail::bdg_accumulate(x, f, yf, window);
}

}  // namespace pbdg
