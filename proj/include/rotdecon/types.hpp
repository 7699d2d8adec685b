#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>

namespace rotdecon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Invalid argument to a numerical routine (zero vector, bad bounds, shape mismatch).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Concentrations too small for the large-concentration MvMF approximation.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input data or configuration fails validation (CLI exit code 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rotdecon
