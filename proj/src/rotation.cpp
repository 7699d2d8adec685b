#include "rotdecon/rotation.hpp"

#include <cmath>

namespace rotdecon {

namespace {

constexpr double kDegenerateTol = 1e-14;

Vector reflector_vector(const Vector& a, int axis) {
  Vector u = a;
  u(axis) += a.norm();
  return u;
}

bool near_negative_axis(const Vector& a, int axis) {
  return reflector_vector(a, axis).norm() <= kDegenerateTol * a.norm();
}

void check_pair(const Vector& a, const Vector& b, int axis) {
  if (a.size() != b.size()) throw DomainError("solve_rotation: dimension mismatch");
  if (a.size() < 1) throw DomainError("solve_rotation: empty vectors");
  if (!(a.norm() > 0.0) || !(b.norm() > 0.0)) throw DomainError("solve_rotation: zero vector");
  if (axis < 0 || axis >= a.size()) throw DomainError("solve_rotation: axis out of range");
}

int pick_axis(const Vector& a, const Vector& b, int axis) {
  const int d = static_cast<int>(a.size());
  if (d > 1 && (near_negative_axis(a, axis) || near_negative_axis(b, axis))) return (axis + 1) % d;
  return axis;
}

}  // namespace

Matrix householder_to_axis(const Vector& a, int axis) {
  const auto d = a.size();
  if (d < 1 || !(a.norm() > 0.0)) throw DomainError("householder_to_axis: zero vector");
  if (axis < 0 || axis >= d) throw DomainError("householder_to_axis: axis out of range");
  const Vector u = reflector_vector(a, axis);
  const double uu = u.squaredNorm();
  Matrix h = Matrix::Identity(d, d);
  h.noalias() -= (2.0 / uu) * u * u.transpose();
  return h;
}

RotationFactorization solve_rotation(const Vector& a, const Vector& b, int axis) {
  check_pair(a, b, axis);
  const int use = pick_axis(a, b, axis);
  RotationFactorization out;
  out.q = householder_to_axis(a, use) * householder_to_axis(b, use);
  out.s = a.norm() / b.norm();
  return out;
}

Vector rotation_diagonal(const Vector& a, const Vector& b, int axis) {
  check_pair(a, b, axis);
  const int use = pick_axis(a, b, axis);
  const Vector u = reflector_vector(a, use);
  const Vector v = reflector_vector(b, use);
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  const double uv = u.dot(v);
  // (I - 2uu'/uu)(I - 2vv'/vv), diagonal entries only.
  return (1.0 - 2.0 * u.array().square() / uu - 2.0 * v.array().square() / vv +
          4.0 * uv / (uu * vv) * u.array() * v.array())
      .matrix();
}

}  // namespace rotdecon
