#pragma once

#include "rotdecon/types.hpp"

#include <array>
#include <vector>

namespace rotdecon {

/// Nonzero window of a cubic B-spline basis row: entries first..first+3.
struct BasisRow {
  int first{};
  std::array<double, 4> values{};
  bool clamped{};  ///< x was outside [lower, upper] and got clamped
};

/// Cubic B-spline basis on [lower, upper] with equidistant interior knots and
/// clamped (4-fold) boundary knots. `num_intervals` intervals give
/// num_intervals + 3 basis functions.
class CubicBasis {
 public:
  CubicBasis() : CubicBasis(0.0, 1.0, 10) {}
  CubicBasis(double lower, double upper, int num_intervals = 10);

  int size() const { return num_intervals_ + 3; }
  int num_intervals() const { return num_intervals_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const std::vector<double>& knots() const { return knots_; }

  BasisRow row(double x) const;

  /// Dense basis vector (size()).
  Vector eval(double x, bool* clamped = nullptr) const;

  /// sum_k coeffs_k B_k(x). Throws DomainError on length mismatch.
  double eval_function(const Vector& coeffs, double x) const;

 private:
  double lower_;
  double upper_;
  int num_intervals_;
  std::vector<double> knots_;
};

}  // namespace rotdecon
