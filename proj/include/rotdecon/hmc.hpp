#pragma once

#include "rotdecon/types.hpp"

#include <functional>

namespace rotdecon {

struct HmcResult {
  Vector q;
  bool accepted{};
  bool diverged{};   ///< non-finite energy or gradient somewhere on the path
  double delta_h{};  ///< H(end) - H(start)
};

using Potential = std::function<double(const Vector&)>;
using PotentialGrad = std::function<Vector(const Vector&)>;

/// One HMC transition: standard normal momentum, L leapfrog steps of size
/// eps, Metropolis correction. eps <= 0 is rejected outright. A non-finite
/// gradient anywhere on the path, or a non-finite end energy, rejects.
HmcResult hmc_update(const Vector& q0, const Potential& u, const PotentialGrad& grad, double eps, int steps,
                     Rng& rng);

/// Deterministic leapfrog trajectory (exposed for tests).
void leapfrog(Vector& q, Vector& p, const PotentialGrad& grad, double eps, int steps, bool* finite = nullptr);

}  // namespace rotdecon
