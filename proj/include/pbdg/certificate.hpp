#pragma once

// Residual certificates shared by every inequality checker.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace pbdg {

/// Outcome of checking one inequality `lhs <= rhs` over a grid.
///
/// `min_residual` is the smallest `rhs - lhs` seen; the certificate passes
/// iff `min_residual >= -tolerance`.
struct Certificate {
  std::string id;
  double min_residual = 0.0;
  std::size_t argmin_index = 0;
  double tolerance = 0.0;
  bool passed = true;
};

struct ResidualSeries {
  std::vector<double> residuals;
  double min_residual = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
};

inline ResidualSeries make_series(std::vector<double> residuals) {
  ResidualSeries s;
  s.residuals = std::move(residuals);
  for (std::size_t k = 0; k < s.residuals.size(); ++k) {
    if (s.residuals[k] < s.min_residual) {
      s.min_residual = s.residuals[k];
      s.argmin = k;
    }
  }
  if (s.residuals.empty()) s.min_residual = 0.0;
  return s;
}

inline Certificate certify_series(std::string id, const ResidualSeries& s,
                                  double tolerance) {
  Certificate c;
  c.id = std::move(id);
  c.min_residual = s.min_residual;
  c.argmin_index = s.argmin;
  c.tolerance = tolerance;
  c.passed = s.min_residual >= -tolerance;
  return c;
}

/// Running accumulator used when residuals are produced one at a time.
class ResidualTracker {
 public:
  explicit ResidualTracker(std::string id) : id_(std::move(id)) {}

  void observe(double residual, std::size_t index) {
    if (!seen_ || residual < min_) {
      min_ = residual;
      argmin_ = index;
      seen_ = true;
    }
  }

  Certificate finish(double tolerance) const {
    Certificate c;
    c.id = id_;
    c.min_residual = seen_ ? min_ : 0.0;
    c.argmin_index = argmin_;
    c.tolerance = tolerance;
    c.passed = c.min_residual >= -tolerance;
    return c;
  }

 private:
  std::string id_;
  double min_ = 0.0;
  std::size_t argmin_ = 0;
  bool seen_ = false;
};

}  // namespace pbdg
