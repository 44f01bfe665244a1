#pragma once

// Step paths (piecewise-constant cadlag paths on a finite grid) and their
// functionals: quadratic variation, running maximum, left limits, cad inverses
// and left-point stochastic integrals.
//
// Convention: X(0-) = 0, so the value at the first grid point is a jump and
// contributes values[0]^2 to the quadratic variation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pbdg {

class StepPath {
 public:
  StepPath() = default;

  StepPath(std::vector<double> times, std::vector<double> values)
      : StepPath(std::move(times), std::vector<std::vector<double>>{std::move(values)}) {}

  StepPath(std::vector<double> times, std::vector<std::vector<double>> components)
      : times_(std::move(times)), comps_(std::move(components)) {
    if (comps_.empty()) throw std::invalid_argument("StepPath: no components");
    for (const auto& c : comps_) {
      if (c.size() != times_.size()) {
        throw std::invalid_argument("StepPath: times/values length mismatch");
      }
      for (double x : c) {
        if (!std::isfinite(x)) throw std::invalid_argument("StepPath: non-finite value");
      }
    }
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!(times_[k] >= 0.0) || (k > 0 && !(times_[k] > times_[k - 1]))) {
        throw std::invalid_argument("StepPath: times must be nonnegative and strictly increasing");
      }
    }
  }

  /// Values on the integer grid 0, 1, ..., n-1.
  static StepPath from_values(std::vector<double> values) {
    std::vector<double> t(values.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k);
    return StepPath(std::move(t), std::move(values));
  }

  std::size_t size() const { return times_.size(); }
  std::size_t dim() const { return comps_.size(); }
  std::span<const double> times() const { return times_; }
  std::span<const double> values() const { return comps_.front(); }
  std::span<const double> component(std::size_t i) const { return comps_.at(i); }

  /// Euclidean norm of the value vector at each grid point.
  std::vector<double> norm() const {
    std::vector<double> out(size(), 0.0);
    for (const auto& c : comps_) {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += c[k] * c[k];
    }
    for (double& x : out) x = std::sqrt(x);
    return out;
  }

  /// First n grid points.
  StepPath truncated(std::size_t n) const {
    n = std::min(n, size());
    std::vector<std::vector<double>> cs;
    for (const auto& c : comps_) cs.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
    return StepPath(std::vector<double>(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(n)),
                    std::move(cs));
  }

  /// Every `stride`-th grid point, starting at index 0.
  StepPath subsample(std::size_t stride) const {
    if (stride == 0) throw std::invalid_argument("subsample: zero stride");
    std::vector<double> t;
    std::vector<std::vector<double>> cs(dim());
    for (std::size_t k = 0; k < size(); k += stride) {
      t.push_back(times_[k]);
      for (std::size_t i = 0; i < dim(); ++i) cs[i].push_back(comps_[i][k]);
    }
    return StepPath(std::move(t), std::move(cs));
  }

  /// Path scaled by lambda in every component.
  StepPath scaled(double lambda) const {
    auto cs = comps_;
    for (auto& c : cs) {
      for (double& x : c) x *= lambda;
    }
    return StepPath(times_, std::move(cs));
  }

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> comps_;
};

/// Quadratic variation and running maximum at each grid point, plus their
/// left limits (qv_left[k] = qv[k-1], with qv_left[0] = 0).
struct PathFunctionals {
  std::vector<double> qv;
  std::vector<double> runmax;
  std::vector<double> qv_left;
  std::vector<double> runmax_left;

  double sqrt_qv(std::size_t k) const { return std::sqrt(qv[k]); }
};

namespace detail {

inline void fill_left(PathFunctionals& f) {
  const std::size_t n = f.qv.size();
  f.qv_left.assign(n, 0.0);
  f.runmax_left.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    f.qv_left[k] = f.qv[k - 1];
    f.runmax_left[k] = f.runmax[k - 1];
  }
}

}  // namespace detail

inline PathFunctionals functionals(std::span<const double> x) {
  PathFunctionals f;
  const std::size_t n = x.size();
  f.qv.resize(n);
  f.runmax.resize(n);
  double qv = 0.0, mx = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - prev;
    qv += d * d;
    mx = std::max(mx, std::abs(x[k]));
    f.qv[k] = qv;
    f.runmax[k] = mx;
    prev = x[k];
  }
  detail::fill_left(f);
  return f;
}

/// For dim > 1: [X] is the sum of the component variations and X* the running
/// maximum of the Euclidean norm.
inline PathFunctionals functionals(const StepPath& p) {
  if (p.dim() == 1) return functionals(p.values());
  PathFunctionals f;
  f.qv.assign(p.size(), 0.0);
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const auto fi = functionals(p.component(i));
    for (std::size_t k = 0; k < p.size(); ++k) f.qv[k] += fi.qv[k];
  }
  const auto nrm = p.norm();
  f.runmax.resize(p.size());
  double mx = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    mx = std::max(mx, nrm[k]);
    f.runmax[k] = mx;
  }
  detail::fill_left(f);
  return f;
}

/// Smallest index k with increasing[k] > level; increasing.size() when the
/// level is never exceeded (the "+infinity" sentinel).
inline std::size_t cad_inverse(std::span<const double> increasing, double level) {
  const auto it = std::upper_bound(increasing.begin(), increasing.end(), level);
  return static_cast<std::size_t>(it - increasing.begin());
}

/// (H.X)[k] = sum_{j=1..k} H[j] (x[j] - x[j-1]); the jump at time 0 is not
/// integrated.
inline std::vector<double> riemann_integral(std::span<const double> integrand,
                                            std::span<const double> x) {
  if (integrand.size() != x.size()) {
    throw std::invalid_argument("riemann_integral: length mismatch");
  }
  std::vector<double> out(x.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    acc += integrand[k] * (x[k] - x[k - 1]);
    out[k] = acc;
  }
  return out;
}

/// [H.X][k] = sum_{j=1..k} H[j]^2 (x[j] - x[j-1])^2.
inline std::vector<double> integral_qv(std::span<const double> integrand,
                                       std::span<const double> x) {
  if (integrand.size() != x.size()) {
    throw std::invalid_argument("integral_qv: length mismatch");
  }
  std::vector<double> out(x.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double d = integrand[k] * (x[k] - x[k - 1]);
    acc += d * d;
    out[k] = acc;
  }
  return out;
}

/// Last grid index whose time is <= t (0 if t precedes the grid).
inline std::size_t grid_index_at(std::span<const double> times, double t) {
  if (times.empty()) return 0;
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  const auto it = std::upper_bound(times.begin(), times.end(), t + slack);
  return it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
}

// CSV: header "time,value" (or "time,value,value2,...") then one row per
// grid point.

inline void write_csv(std::ostream& out, const StepPath& p) {
  out << "time,value";
  for (std::size_t i = 1; i < p.dim(); ++i) out << ",value" << (i + 1);
  out << '\n';
  std::ostringstream row;
  row.precision(17);
  for (std::size_t k = 0; k < p.size(); ++k) {
    row.str("");
    row << p.times()[k];
    for (std::size_t i = 0; i < p.dim(); ++i) row << ',' << p.component(i)[k];
    out << row.str() << '\n';
  }
}

inline StepPath read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("path csv: empty input");
  std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2 || line.rfind("time,value", 0) != 0) {
    throw std::runtime_error("path csv: expected header time,value[,value2,...]");
  }
  std::vector<double> times;
  std::vector<std::vector<double>> comps(cols - 1);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols) throw std::runtime_error("path csv: too many columns");
      const double v = std::stod(cell);
      if (c == 0) {
        times.push_back(v);
      } else {
        comps[c - 1].push_back(v);
      }
      ++c;
    }
    if (c != cols) throw std::runtime_error("path csv: too few columns");
  }
  return StepPath(std::move(times), std::move(comps));
}

}  // namespace pbdg
