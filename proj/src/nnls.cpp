#include "rotdecon/nnls.hpp"

#include <Eigen/QR>

#include <cmath>
#include <vector>

namespace rotdecon {

namespace {

// Least squares restricted to the passive columns; other entries zero.
Vector passive_solve(const Matrix& a, const Vector& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < passive.size(); ++j)
    if (passive[j]) idx.push_back(static_cast<Eigen::Index>(j));
  Matrix sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) sub.col(k) = a.col(idx[k]);
  const Vector s = sub.colPivHouseholderQr().solve(b);
  Vector z = Vector::Zero(a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = s(k);
  return z;
}

}  // namespace

Vector nnls(const Matrix& a, const Vector& b, double tol, int max_iter) {
  if (a.rows() != b.size()) throw DomainError("nnls: dimension mismatch");
  const auto n = a.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(n, false);
  Vector w = a.transpose() * b;
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  const double thresh = tol * scale;
  for (int outer = 0; outer < max_iter; ++outer) {
    Eigen::Index best = -1;
    double best_w = thresh;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < max_iter; ++inner) {
      const Vector z = passive_solve(a, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z(j) <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      // Step toward z until the first passive coordinate hits zero.
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z(j) <= 0.0) step = std::min(step, x(j) / (x(j) - z(j)));
      x += step * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && x(j) <= thresh * 1e-6) {
          passive[j] = false;
          x(j) = 0.0;
        }
    }
    w = a.transpose() * (b - a * x);
  }
  return x.cwiseMax(0.0);
}

}  // namespace rotdecon
