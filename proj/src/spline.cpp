#include "rotdecon/spline.hpp"

#include <algorithm>
#include <cmath>

namespace rotdecon {

CubicBasis::CubicBasis(double lower, double upper, int num_intervals)
    : lower_(lower), upper_(upper), num_intervals_(num_intervals) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
    throw DomainError("CubicBasis: need finite lower < upper");
  if (num_intervals < 1) throw DomainError("CubicBasis: need at least one interval");
  const double delta = (upper - lower) / num_intervals;
  knots_.assign(4, lower);
  for (int j = 1; j < num_intervals; ++j) knots_.push_back(lower + j * delta);
  knots_.insert(knots_.end(), 4, upper);
}

BasisRow CubicBasis::row(double x) const {
  BasisRow out;
  if (x < lower_) {
    x = lower_;
    out.clamped = true;
  } else if (x > upper_) {
    x = upper_;
    out.clamped = true;
  }
  // Knot span index `span` with t[span] <= x < t[span+1], span in [3, size()-1].
  const int last = size() - 1;
  int span;
  if (x >= upper_) {
    span = last;
  } else {
    const double delta = (upper_ - lower_) / num_intervals_;
    span = 3 + std::min(num_intervals_ - 1, static_cast<int>(std::floor((x - lower_) / delta)));
    while (span > 3 && x < knots_[span]) --span;
    while (span < last && x >= knots_[span + 1]) ++span;
  }
  // Cox-de Boor triangle for the four nonzero functions N_{span-3..span}.
  std::array<double, 4> left{}, right{}, n{};
  n[0] = 1.0;
  for (int j = 1; j <= 3; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  out.first = span - 3;
  out.values = n;
  return out;
}

Vector CubicBasis::eval(double x, bool* clamped) const {
  const BasisRow r = row(x);
  Vector v = Vector::Zero(size());
  for (int k = 0; k < 4; ++k) v(r.first + k) = r.values[k];
  if (clamped) *clamped = r.clamped;
  return v;
}

double CubicBasis::eval_function(const Vector& coeffs, double x) const {
  if (coeffs.size() != size()) throw DomainError("CubicBasis::eval_function: coefficient length mismatch");
  const BasisRow r = row(x);
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += coeffs(r.first + k) * r.values[k];
  return s;
}

}  // namespace rotdecon
