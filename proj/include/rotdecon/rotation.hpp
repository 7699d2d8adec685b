#pragma once

#include "rotdecon/types.hpp"

namespace rotdecon {

/// Scaled-rotation factorization a = s * q * b.
struct RotationFactorization {
  Matrix q;    ///< orthogonal, det +1
  double s{};  ///< ||a|| / ||b||
};

/// Householder reflector I - 2 u u^T / ||u||^2 with u = a + ||a|| e_axis.
/// Maps a to -||a|| e_axis. `axis` is zero-based.
Matrix householder_to_axis(const Vector& a, int axis = 0);

/// Rotation taking the direction of b to the direction of a, built as the
/// product of the two reflectors H(a) H(b) onto a common axis.
///
/// The axis defaults to the first coordinate. If either vector sits within
/// 1e-14 (relative) of minus that axis, both reflectors switch to the next
/// axis so the construction stays well conditioned.
RotationFactorization solve_rotation(const Vector& a, const Vector& b, int axis = 0);

/// Diagonal of H(a) H(b) without forming either matrix. Same axis rule as
/// solve_rotation. Used by the likelihood, which only needs trace(G F).
Vector rotation_diagonal(const Vector& a, const Vector& b, int axis = 0);

}  // namespace rotdecon
