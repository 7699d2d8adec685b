#pragma once

#include "rotdecon/types.hpp"

namespace rotdecon {

/// min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set).
/// `tol` is relative to the largest |A^T b| entry.
Vector nnls(const Matrix& a, const Vector& b, double tol = 1e-10, int max_iter = 0);

}  // namespace rotdecon
