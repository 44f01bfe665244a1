#pragma once

// Pathwise inequality checkers. Each returns certificates built from the
// residual (right side minus left side) at every grid point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbdg/certificate.hpp"
#include "pbdg/integrand.hpp"
#include "pbdg/path.hpp"
#include "pbdg/young.hpp"

namespace pbdg {

inline constexpr double kDefaultRelTol = 1e-9;

using CertificatePair = std::pair<Certificate, Certificate>;
using BdgTracks = std::pair<IntegrandTrack, IntegrandTrack>;

/// Terminal X* + sqrt[X], floored at 1.
inline double path_scale(const PathFunctionals& f) {
  if (f.qv.empty()) return 1.0;
  return std::max(1.0, f.runmax.back() + std::sqrt(f.qv.back()));
}

/// sqrt[X] <= 3 X* - (H.X)  and  X* <= 6 sqrt[X] + 2 (H.X), H the Davis integrand.
inline CertificatePair davis_certificates(std::span<const double> x, const PathFunctionals& f,
                                          double rel_tol = kDefaultRelTol) {
  const auto h = davis(x, f);
  const auto hx = riemann_integral(h.values, x);
  ResidualTracker upper("davis.qv_le_max"), lower("davis.max_le_qv");
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double q = std::sqrt(f.qv[k]);
    upper.observe(3.0 * f.runmax[k] - hx[k] - q, k);
    lower.observe(6.0 * q + 2.0 * hx[k] - f.runmax[k], k);
  }
  const double tol = rel_tol * path_scale(f);
  return {upper.finish(tol), lower.finish(tol)};
}

/// (H.X)* <= 3 (X* + sqrt[X])  and  [H.X] <= [X].
inline CertificatePair davis_bounds_certificates(std::span<const double> x,
                                                 const PathFunctionals& f,
                                                 double rel_tol = kDefaultRelTol) {
  const auto h = davis(x, f);
  const auto hx = riemann_integral(h.values, x);
  const auto hxqv = integral_qv(h.values, x);
  ResidualTracker sup("davis_bounds.integral_max"), qv("davis_bounds.integral_qv");
  double hmax = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    hmax = std::max(hmax, std::abs(hx[k]));
    sup.observe(3.0 * (f.runmax[k] + std::sqrt(f.qv[k])) - hmax, k);
    qv.observe(f.qv[k] - hxqv[k], k);
  }
  const double s = path_scale(f);
  return {sup.finish(rel_tol * s), qv.finish(rel_tol * s * s)};
}

/// Residual series of X* - 4 sqrt[X] <= (K.X) <= 3 X* - 2 sqrt[X], K the
/// continuous-case integrand; index 0 is the lower bound, 1 the upper.
inline std::pair<ResidualSeries, ResidualSeries> continuous_residuals(std::span<const double> x,
                                                                     const PathFunctionals& f) {
  const auto kx = riemann_integral(continuous_davis(x, f).values, x);
  std::vector<double> lo(x.size()), hi(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double q = std::sqrt(f.qv[k]);
    lo[k] = kx[k] - (f.runmax[k] - 4.0 * q);
    hi[k] = 3.0 * f.runmax[k] - 2.0 * q - kx[k];
  }
  return {make_series(std::move(lo)), make_series(std::move(hi))};
}

/// Largest violation of either continuous-case bound, relative to the
/// terminal X* + sqrt[X]; 0 when both hold everywhere.
inline double continuous_violation(std::span<const double> x, const PathFunctionals& f) {
  const auto [lo, hi] = continuous_residuals(x, f);
  const double scale = f.qv.empty() ? 0.0 : f.runmax.back() + std::sqrt(f.qv.back());
  const double worst = std::max(0.0, -std::min(lo.min_residual, hi.min_residual));
  return scale > 0.0 ? worst / scale : 0.0;
}

/// The continuous-case bounds only hold in the refinement limit, so the
/// tolerance is a relative envelope calibrated per grid size.
inline CertificatePair continuous_certificates(std::span<const double> x, const PathFunctionals& f,
                                               double rel_envelope) {
  const auto [lo, hi] = continuous_residuals(x, f);
  const double scale = f.qv.empty() ? 0.0 : f.runmax.back() + std::sqrt(f.qv.back());
  const double tol = rel_envelope * scale;
  return {certify_series("continuous.lower", lo, tol), certify_series("continuous.upper", hi, tol)};
}

/// Phi(sqrt[X]) <= c_p Phi(X*) - (H.X)  and  Phi(X*) <= c_p Phi(sqrt[X]) + 2 (G.X).
inline CertificatePair bdg_certificates(std::span<const double> x, const PathFunctionals& f,
                                        const YoungFunction& yf, const BdgTracks& tracks,
                                        double rel_tol = kDefaultRelTol) {
  const double cp = c_p(yf.exponent());
  const auto hx = riemann_integral(tracks.first.values, x);
  const auto gx = riemann_integral(tracks.second.values, x);
  ResidualTracker upper("bdg.phi_qv_le_phi_max"), lower("bdg.phi_max_le_phi_qv");
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double pq = yf.big_phi(std::sqrt(f.qv[k]));
    const double pm = yf.big_phi(f.runmax[k]);
    upper.observe(cp * pm - hx[k] - pq, k);
    lower.observe(cp * pq + 2.0 * gx[k] - pm, k);
  }
  double scale = 1.0;
  if (!x.empty()) {
    scale = std::max(1.0, cp * (yf.big_phi(f.runmax.back()) + yf.big_phi(std::sqrt(f.qv.back()))));
  }
  return {upper.finish(rel_tol * scale), lower.finish(rel_tol * scale)};
}

inline CertificatePair bdg_certificates(std::span<const double> x, const PathFunctionals& f,
                                        const YoungFunction& yf, double rel_tol = kDefaultRelTol) {
  return bdg_certificates(x, f, yf, bdg_pair(x, f, yf), rel_tol);
}

/// sqrt[H.X] <= p^2 Phi(sqrt[X])  and
/// sqrt[G.X] <= (p y)^p Phi(sqrt[X]) + (p - 1) / y Phi(X*),  y in [1/p, 1].
inline CertificatePair hxgx_certificates(std::span<const double> x, const PathFunctionals& f,
                                         const YoungFunction& yf, double y, const BdgTracks& tracks,
                                         double rel_tol = kDefaultRelTol) {
  const double p = yf.exponent();
  if (!(y >= 1.0 / p - 1e-15 && y <= 1.0)) {
    throw std::invalid_argument("hxgx_certificates: y must lie in [1/p, 1]");
  }
  const auto hq = integral_qv(tracks.first.values, x);
  const auto gq = integral_qv(tracks.second.values, x);
  const double a = std::pow(p * y, p);
  const double b = (p - 1.0) / y;
  ResidualTracker hc("hxgx.h"), gc("hxgx.g");
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double pq = yf.big_phi(std::sqrt(f.qv[k]));
    const double pm = yf.big_phi(f.runmax[k]);
    hc.observe(p * p * pq - std::sqrt(hq[k]), k);
    gc.observe(a * pq + b * pm - std::sqrt(gq[k]), k);
  }
  double scale = 1.0;
  if (!x.empty()) {
    scale = std::max(1.0, (p * p + a + b) * (yf.big_phi(f.runmax.back()) +
                                              yf.big_phi(std::sqrt(f.qv.back()))));
  }
  return {hc.finish(rel_tol * scale), gc.finish(rel_tol * scale)};
}

inline CertificatePair hxgx_certificates(std::span<const double> x, const PathFunctionals& f,
                                         const YoungFunction& yf, double y,
                                         double rel_tol = kDefaultRelTol) {
  return hxgx_certificates(x, f, yf, y, bdg_pair(x, f, yf), rel_tol);
}

/// For nondecreasing positive f, g on a grid, checks
///   2g - 3f <= g^2/(f v g) + int g^2/(f^2 v g^2) d(f v g) - int 1/(f v g) d f^2 <= 3g - 2f
/// with left-point Stieltjes sums. The tolerance is proportional to the
/// largest grid increment, so it vanishes under refinement.
inline CertificatePair two_function_certificate(std::span<const double> fg,
                                                std::span<const double> gg) {
  if (fg.size() != gg.size() || fg.empty()) {
    throw std::invalid_argument("two_function_certificate: length mismatch");
  }
  if (!(fg[0] > 0.0) || !(gg[0] > 0.0)) {
    throw std::domain_error("two_function_certificate: f(0) and g(0) must be positive");
  }
  ResidualTracker lower("two_function.lower"), upper("two_function.upper");
  double int1 = 0.0, int2 = 0.0, step = 0.0;
  for (std::size_t k = 0; k < fg.size(); ++k) {
    const double f = fg[k], g = gg[k], m = std::max(f, g);
    if (k > 0) {
      const double fp = fg[k - 1], gp = gg[k - 1], mp = std::max(fp, gp);
      int1 += (gp * gp) / (mp * mp) * (m - mp);
      int2 += (f * f - fp * fp) / mp;
      step = std::max(step, std::abs(f - fp) + std::abs(g - gp));
    }
    const double middle = g * g / m + int1 - int2;
    lower.observe(middle - (2.0 * g - 3.0 * f), k);
    upper.observe(3.0 * g - 2.0 * f - middle, k);
  }
  const double f0 = std::min(fg[0], gg[0]);
  const double var = (fg.back() - fg[0]) + (gg.back() - gg[0]);
  const double tol = 2.0 * step * (1.0 + var / f0) + kDefaultRelTol * std::max(1.0, fg.back() + gg.back());
  return {lower.finish(tol), upper.finish(tol)};
}

/// Davis inequalities for an n-dimensional path obtained by summing the
/// component inequalities:
///   sqrt[X] <= 3n X* - (H.X)  and  X* <= 6 sqrt(n) sqrt[X] + 2 (H.X),
/// where (H.X) = sum_i (H^i.X^i) and X* is the running max of the norm.
inline CertificatePair multidim_davis(const StepPath& p, double rel_tol = kDefaultRelTol) {
  const std::size_t n = p.dim();
  if (n < 2) throw std::invalid_argument("multidim_davis: use the scalar checker for dim 1");
  std::vector<double> hx(p.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = p.component(i);
    const auto fi = functionals(xi);
    const auto ii = riemann_integral(davis(xi, fi).values, xi);
    for (std::size_t k = 0; k < p.size(); ++k) hx[k] += ii[k];
  }
  const auto f = functionals(p);
  const double dn = static_cast<double>(n);
  ResidualTracker upper("multidim.qv_le_max"), lower("multidim.max_le_qv");
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = std::sqrt(f.qv[k]);
    upper.observe(3.0 * dn * f.runmax[k] - hx[k] - q, k);
    lower.observe(6.0 * std::sqrt(dn) * q + 2.0 * hx[k] - f.runmax[k], k);
  }
  const double tol = rel_tol * dn * path_scale(f);
  return {upper.finish(tol), lower.finish(tol)};
}

/// (1/n) sum_i (X^i)* <= X* <= sum_i (X^i)*.
inline CertificatePair norm_sandwich_certificates(const StepPath& p,
                                                  double rel_tol = kDefaultRelTol) {
  const double dn = static_cast<double>(p.dim());
  std::vector<double> sum(p.size(), 0.0);
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const auto fi = functionals(p.component(i));
    for (std::size_t k = 0; k < p.size(); ++k) sum[k] += fi.runmax[k];
  }
  const auto f = functionals(p);
  ResidualTracker lo("sandwich.lower"), hi("sandwich.upper");
  for (std::size_t k = 0; k < p.size(); ++k) {
    lo.observe(f.runmax[k] - sum[k] / dn, k);
    hi.observe(sum[k] - f.runmax[k], k);
  }
  const double tol = rel_tol * path_scale(f);
  return {lo.finish(tol), hi.finish(tol)};
}

}  // namespace pbdg
