#pragma once

// Young functions: a density phi, its integral Phi, the right-continuous
// inverse psi of phi and the conjugate Psi, together with the growth
// exponent p = sup u phi(u) / Phi(u).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pbdg/certificate.hpp"

namespace pbdg {

struct PowerFamily {
  double p;
};

struct Tabulated {
  std::vector<double> knots;
  std::vector<double> phi_values;
};

/// The constant p (6p)^p multiplying the pathwise BDG inequalities.
inline double c_p(double p) { return p * std::pow(6.0 * p, p); }

class YoungFunction {
 public:
  /// Phi(t) = t^p, p > 1.
  static YoungFunction power(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) {
      throw std::domain_error("power family requires 1 < p < inf");
    }
    YoungFunction yf;
    yf.kind_ = PowerFamily{p};
    yf.p_ = p;
    yf.c_phi_ = std::pow(2.0, p - 1.0);
    return yf;
  }

  /// Piecewise-linear phi through (knots[i], phi_values[i]), extended past
  /// the last knot with the slope of the last segment. A knot at 0 with
  /// value 0 is prepended when absent.
  static YoungFunction tabulated(std::vector<double> knots,
                                 std::vector<double> phi_values) {
    if (knots.size() != phi_values.size() || knots.empty()) {
      throw std::invalid_argument("tabulated phi: knots/values size mismatch");
    }
    if (knots.front() < 0.0) {
      throw std::domain_error("tabulated phi: negative knot");
    }
    if (knots.front() > 0.0) {
      knots.insert(knots.begin(), 0.0);
      phi_values.insert(phi_values.begin(), 0.0);
    }
    if (phi_values.front() != 0.0) {
      throw std::domain_error("tabulated phi: phi(0) must be 0");
    }
    if (knots.size() < 2) {
      throw std::domain_error("tabulated phi: need at least one segment");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (!std::isfinite(knots[i]) || !std::isfinite(phi_values[i])) {
        throw std::domain_error("tabulated phi: non-finite entry");
      }
      if (i > 0 && !(knots[i] > knots[i - 1])) {
        throw std::domain_error("tabulated phi: knots must strictly increase");
      }
      if (i > 0 && phi_values[i] < phi_values[i - 1]) {
        throw std::domain_error("tabulated phi: values must be nondecreasing");
      }
    }

    YoungFunction yf;
    Table& t = yf.table_;
    t.k = knots;
    t.v = phi_values;
    const std::size_t m = knots.size() - 1;
    t.slope.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      t.slope[i] = (t.v[i + 1] - t.v[i]) / (t.k[i + 1] - t.k[i]);
    }
    if (!(t.slope.front() > 0.0)) {
      // phi vanishing on (0, a) makes phi(2t)/phi(t) unbounded.
      throw std::domain_error("tabulated phi: not tame (flat at the origin)");
    }
    if (!(t.slope.back() > 0.0)) {
      throw std::domain_error(
          "tabulated phi: last segment must have positive slope");
    }
    t.cum.assign(m + 1, 0.0);
    t.psicum.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double h = t.k[i + 1] - t.k[i];
      t.cum[i + 1] = t.cum[i] + 0.5 * h * (t.v[i] + t.v[i + 1]);
      // psi runs linearly from k[i] to k[i+1] while phi climbs v[i]..v[i+1].
      t.psicum[i + 1] =
          t.psicum[i] + 0.5 * (t.v[i + 1] - t.v[i]) * (t.k[i] + t.k[i + 1]);
    }
    yf.kind_ = Tabulated{std::move(knots), std::move(phi_values)};
    yf.p_ = yf.tabulated_exponent();
    yf.c_phi_ = yf.tabulated_tameness();
    return yf;
  }

  /// Two-column text file: `knot value` per line (comma or whitespace
  /// separated, `#` starts a comment).
  static YoungFunction load_tabulated(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> knots, values;
    std::string line;
    while (std::getline(in, line)) {
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a = 0.0, b = 0.0;
      if (!(ss >> a)) continue;
      if (!(ss >> b)) throw std::runtime_error("malformed line in " + path);
      knots.push_back(a);
      values.push_back(b);
    }
    return tabulated(std::move(knots), std::move(values));
  }

  bool is_power() const { return std::holds_alternative<PowerFamily>(kind_); }
  const std::variant<PowerFamily, Tabulated>& kind() const { return kind_; }

  /// Exponent p in (1, inf).
  double exponent() const { return p_; }
  /// c_phi with phi(2t) <= c_phi phi(t).
  double tameness() const { return c_phi_; }

  double phi(double t) const {
    check_arg(t);
    if (auto* pw = std::get_if<PowerFamily>(&kind_)) {
      return t == 0.0 ? 0.0 : pw->p * std::pow(t, pw->p - 1.0);
    }
    const Table& tb = table_;
    const std::size_t i = segment_of(t);
    return tb.v[i] + slope_at(i) * (t - tb.k[i]);
  }

  double big_phi(double t) const {
    check_arg(t);
    if (auto* pw = std::get_if<PowerFamily>(&kind_)) {
      return std::pow(t, pw->p);
    }
    const Table& tb = table_;
    const std::size_t i = segment_of(t);
    const double d = t - tb.k[i];
    return tb.cum[i] + tb.v[i] * d + 0.5 * slope_at(i) * d * d;
  }

  /// Right-continuous inverse: inf{s : phi(s) > v}.
  double psi(double v) const {
    check_arg(v);
    if (auto* pw = std::get_if<PowerFamily>(&kind_)) {
      return std::pow(v / pw->p, 1.0 / (pw->p - 1.0));
    }
    const Table& tb = table_;
    const auto it = std::upper_bound(tb.v.begin(), tb.v.end(), v);
    return inverse_on(static_cast<std::size_t>(it - tb.v.begin()), v);
  }

  /// Left limit psi(v-) = inf{s : phi(s) >= v}.
  double psi_left(double v) const {
    check_arg(v);
    if (is_power()) return psi(v);
    const Table& tb = table_;
    if (v == 0.0) return 0.0;
    const auto it = std::lower_bound(tb.v.begin(), tb.v.end(), v);
    return inverse_on(static_cast<std::size_t>(it - tb.v.begin()), v);
  }

  /// Psi(v) = int_0^v psi, the convex conjugate of Phi.
  double big_psi(double v) const {
    check_arg(v);
    if (auto* pw = std::get_if<PowerFamily>(&kind_)) {
      const double q = pw->p / (pw->p - 1.0);
      return std::pow(pw->p, -1.0 / (pw->p - 1.0)) * std::pow(v, q) / q;
    }
    const Table& tb = table_;
    const auto it = std::upper_bound(tb.v.begin(), tb.v.end(), v);
    const std::size_t j = static_cast<std::size_t>(it - tb.v.begin());
    const std::size_t last = tb.v.size() - 1;
    const std::size_t i = j == tb.v.size() ? last : j - 1;
    const double m = i == last ? tb.slope.back() : tb.slope[i];
    const double d = v - tb.v[i];
    return tb.psicum[i] + tb.k[i] * d + 0.5 * d * d / m;
  }

 private:
  struct Table {
    std::vector<double> k, v, slope, cum, psicum;
  };

  static void check_arg(double x) {
    if (!(x >= 0.0)) throw std::domain_error("Young function: negative argument");
  }

  // Index i of the segment [k[i], k[i+1]) containing t; the last knot owns
  // the linear extension.
  std::size_t segment_of(double t) const {
    const auto& k = table_.k;
    const auto it = std::upper_bound(k.begin(), k.end(), t);
    return static_cast<std::size_t>(it - k.begin()) - 1;
  }

  double slope_at(std::size_t i) const {
    return i < table_.slope.size() ? table_.slope[i] : table_.slope.back();
  }

  // j is the first knot index whose value exceeds (or reaches) v.
  double inverse_on(std::size_t j, double v) const {
    const Table& tb = table_;
    if (j == tb.v.size()) {
      return tb.k.back() + (v - tb.v.back()) / tb.slope.back();
    }
    if (j == 0) return 0.0;
    return tb.k[j - 1] + (v - tb.v[j - 1]) / tb.slope[j - 1];
  }

  double ratio(double u) const {
    const double den = big_phi(u);
    return den > 0.0 ? u * phi(u) / den : 0.0;
  }

  double tabulated_exponent() const {
    const Table& tb = table_;
    // phi linear through the origin on the first segment gives ratio 2, which
    // is also the limit at infinity of the linear extension.
    double best = 2.0;
    const std::size_t m = tb.slope.size();
    for (std::size_t i = 0; i <= m; ++i) {
      const double lo = tb.k[i];
      const double hi = i < m ? tb.k[i + 1] : std::numeric_limits<double>::infinity();
      const double s = slope_at(i);
      if (lo > 0.0) best = std::max(best, ratio(lo));
      // On the segment phi(u) = a + s u and Phi(u) = c + a u + s u^2 / 2; the
      // derivative of u phi / Phi vanishes where (a s / 2) u^2 + 2 s c u + a c = 0.
      const double a = tb.v[i] - s * lo;
      const double c = tb.cum[i] - tb.v[i] * lo + 0.5 * s * lo * lo;
      for (double r : quadratic_roots(0.5 * a * s, 2.0 * s * c, a * c)) {
        if (r > lo && r < hi && r > 0.0) best = std::max(best, ratio(r));
      }
    }
    // Geometric grid as a safety net over [min knot / 10, 10 max knot].
    const double lo = tb.k[1] / 10.0;
    const double hi = 10.0 * tb.k.back();
    constexpr int kGrid = 10000;
    const double step = std::log(hi / lo) / (kGrid - 1);
    for (int i = 0; i < kGrid; ++i) {
      best = std::max(best, ratio(lo * std::exp(step * i)));
    }
    return best;
  }

  // phi(2t)/phi(t) is a ratio of linear functions between consecutive points
  // of {k_i} u {k_i / 2}, hence monotone there; checking those points and the
  // limits (both 2) is exact.
  double tabulated_tameness() const {
    double best = 2.0;
    for (double k : table_.k) {
      for (double t : {k, 0.5 * k}) {
        if (t > 0.0) best = std::max(best, phi(2.0 * t) / phi(t));
      }
    }
    if (!std::isfinite(best)) {
      throw std::domain_error("tabulated phi: not tame");
    }
    return best;
  }

  static std::vector<double> quadratic_roots(double a, double b, double c) {
    if (a == 0.0) {
      if (b == 0.0) return {};
      return {-c / b};
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return {};
    const double sq = std::sqrt(disc);
    return {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)};
  }

  std::variant<PowerFamily, Tabulated> kind_ = PowerFamily{2.0};
  Table table_;
  double p_ = 2.0;
  double c_phi_ = 2.0;
};

/// One certificate per inequality of the Young battery, each holding the
/// minimum residual normalised by the larger side of the inequality.
struct YoungBattery {
  std::vector<Certificate> certificates;
  bool passed() const {
    return std::all_of(certificates.begin(), certificates.end(),
                       [](const Certificate& c) { return c.passed; });
  }
};

namespace detail {

inline void observe_le(ResidualTracker& tr, double lhs, double rhs,
                       std::size_t index) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  tr.observe(scale > 0.0 ? (rhs - lhs) / scale : 0.0, index);
}

}  // namespace detail

/// Evaluates, over `grid` (and grid pairs for the two-argument forms):
///   u v <= Phi(u) + Psi(v)
///   Phi(a u) <= a^p Phi(u)           for a >= 1
///   Psi(a v) <= a Psi(v)             for a <= 1
///   Psi(s) <= (p - 1) Phi(psi(s-))
///   psi(phi(s)-) <= s
///   Psi(phi(s)) <= (p - 1) Phi(s)
inline YoungBattery check_young_battery(const YoungFunction& yf,
                                        const std::vector<double>& grid,
                                        double rel_tol = 1e-9) {
  static constexpr std::array<double, 7> kUp{1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0};
  static constexpr std::array<double, 7> kDown{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
  const double p = yf.exponent();

  ResidualTracker conj("young.conjugate");
  ResidualTracker grow("young.power_growth");
  ResidualTracker sub("young.conjugate_sublinear");
  ResidualTracker psib("young.psi_bound");
  ResidualTracker inv("young.inverse_left");
  ResidualTracker pp("young.psi_of_phi");

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid[i];
    const double bu = yf.big_phi(u);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = grid[j];
      detail::observe_le(conj, u * v, bu + yf.big_psi(v), i * grid.size() + j);
    }
    for (double a : kUp) {
      detail::observe_le(grow, yf.big_phi(a * u), std::pow(a, p) * bu, i);
    }
    for (double a : kDown) {
      detail::observe_le(sub, yf.big_psi(a * u), a * yf.big_psi(u), i);
    }
    detail::observe_le(psib, yf.big_psi(u), (p - 1.0) * yf.big_phi(yf.psi_left(u)), i);
    const double ph = yf.phi(u);
    detail::observe_le(inv, yf.psi_left(ph), u, i);
    detail::observe_le(pp, yf.big_psi(ph), (p - 1.0) * bu, i);
  }

  YoungBattery out;
  for (const auto* tr : {&conj, &grow, &sub, &psib, &inv, &pp}) {
    out.certificates.push_back(tr->finish(rel_tol));
  }
  return out;
}

}  // namespace pbdg
