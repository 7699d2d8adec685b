#include <doctest.h>

#include "oracles.hpp"

#include <rotdecon/random.hpp>
#include <rotdecon/spline.hpp>

using namespace rotdecon;

TEST_CASE("basis size and boundary values") {
  CubicBasis basis(0.0, 10.0, 10);
  CHECK(basis.size() == 13);
  Vector at_a = basis.eval(0.0);
  CHECK(at_a(0) == doctest::Approx(1.0));
  CHECK(at_a.tail(12).cwiseAbs().maxCoeff() == 0.0);
  Vector at_b = basis.eval(10.0);
  CHECK(at_b(12) == doctest::Approx(1.0));
  CHECK(at_b.head(12).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interior knots give the 1/6, 2/3, 1/6 pattern") {
  CubicBasis basis(0.0, 10.0, 10);
  // Knots at 3..7 are at least three intervals from either end, so the
  // spanning functions are the uniform ones.
  for (int knot = 3; knot <= 7; ++knot) {
    Vector v = basis.eval(static_cast<double>(knot));
    int nonzero = 0;
    for (int k = 0; k < v.size(); ++k) nonzero += v(k) > 1e-15;
    CHECK(nonzero == 3);
    Eigen::Index first;
    v.maxCoeff(&first);
    CHECK(v(first) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(v(first - 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(v(first + 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  }
}

TEST_CASE("matches the recursive Cox-de Boor definition") {
  CubicBasis basis(-1.0, 4.0, 7);
  const auto& t = basis.knots();
  Rng rng(1);
  for (int rep = 0; rep < 300; ++rep) {
    const double x = -1.0 + 5.0 * uniform01(rng);
    Vector v = basis.eval(x);
    for (int j = 0; j < basis.size(); ++j) CHECK(v(j) == doctest::Approx(oracle::cox_de_boor(t, j, 3, x)).epsilon(1e-12));
  }
}

TEST_CASE("partition of unity, nonnegativity, local support") {
  CubicBasis basis(0.0, 10.0, 10);
  Rng rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = 10.0 * uniform01(rng);
    Vector v = basis.eval(x);
    CHECK(std::abs(v.sum() - 1.0) <= 1e-12);
    CHECK(v.minCoeff() >= 0.0);
    int nonzero = 0;
    for (int k = 0; k < v.size(); ++k) nonzero += v(k) != 0.0;
    CHECK(nonzero <= 4);
    const auto& t = basis.knots();
    for (int j = 0; j < basis.size(); ++j)
      if (x < t[j] || x > t[j + 4]) CHECK(v(j) == 0.0);
  }
}

TEST_CASE("second derivative is continuous across interior knots") {
  CubicBasis basis(0.0, 10.0, 10);
  const double h = 1e-4;
  for (int knot = 1; knot <= 9; ++knot) {
    const double x = knot;
    // Second differences are exact for cubics, and B'' is linear on each
    // piece, so extrapolate from two one-sided stencils to the knot.
    auto d2 = [&](double y) { return Vector((basis.eval(y + h) - 2.0 * basis.eval(y) + basis.eval(y - h)) / (h * h)); };
    Vector left = 2.0 * d2(x - h) - d2(x - 2 * h);
    Vector right = 2.0 * d2(x + h) - d2(x + 2 * h);
    CHECK((left - right).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("eval_function") {
  CubicBasis basis(0.0, 10.0, 10);
  Vector c = Vector::Constant(13, 2.5);
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const double x = 10.0 * uniform01(rng);
    CHECK(basis.eval_function(c, x) == doctest::Approx(2.5).epsilon(1e-13));
    CHECK(basis.eval_function(Vector::Zero(13), x) == 0.0);
    Vector r(13);
    for (int k = 0; k < 13; ++k) r(k) = uniform01(rng);
    BasisRow row = basis.row(x);
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < 4; ++k)
      if (row.values[k] > 0.0) {
        lo = std::min(lo, r(row.first + k));
        hi = std::max(hi, r(row.first + k));
      }
    const double val = basis.eval_function(r, x);
    CHECK(val >= lo - 1e-14);
    CHECK(val <= hi + 1e-14);
  }
  CHECK_THROWS_AS(basis.eval_function(Vector::Ones(12), 1.0), DomainError);
}

TEST_CASE("out-of-range input is clamped and flagged") {
  CubicBasis basis(0.0, 10.0, 10);
  bool clamped = false;
  Vector v = basis.eval(12.0, &clamped);
  CHECK(clamped);
  CHECK(v(12) == doctest::Approx(1.0));
  basis.eval(-0.5, &clamped);
  CHECK(clamped);
  basis.eval(5.0, &clamped);
  CHECK_FALSE(clamped);
  CHECK_THROWS_AS(CubicBasis(1.0, 1.0, 10), DomainError);
}
