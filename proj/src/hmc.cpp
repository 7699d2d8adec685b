#include "rotdecon/hmc.hpp"

#include "rotdecon/random.hpp"

#include <cmath>

namespace rotdecon {

void leapfrog(Vector& q, Vector& p, const PotentialGrad& grad, double eps, int steps, bool* finite) {
  bool ok = true;
  Vector g = grad(q);
  ok = ok && g.allFinite();
  p -= 0.5 * eps * g;
  for (int s = 0; s < steps && ok; ++s) {
    q += eps * p;
    g = grad(q);
    if (!g.allFinite()) {
      ok = false;
      break;
    }
    if (s + 1 < steps) p -= eps * g;
  }
  if (ok) p -= 0.5 * eps * g;
  if (finite) *finite = ok;
}

HmcResult hmc_update(const Vector& q0, const Potential& u, const PotentialGrad& grad, double eps, int steps,
                     Rng& rng) {
  HmcResult res;
  res.q = q0;
  if (!(eps > 0.0) || steps < 1) {
    res.diverged = true;
    return res;
  }
  Vector p(q0.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std_normal(rng);
  const double h0 = u(q0) + 0.5 * p.squaredNorm();
  Vector q = q0;
  bool finite = true;
  leapfrog(q, p, grad, eps, steps, &finite);
  const double h1 = finite ? u(q) + 0.5 * p.squaredNorm() : std::numeric_limits<double>::infinity();
  res.delta_h = h1 - h0;
  if (!std::isfinite(h1) || !std::isfinite(h0)) {
    res.diverged = true;
    return res;
  }
  if (std::log(uniform01(rng)) < -res.delta_h) {
    res.q = q;
    res.accepted = true;
  }
  return res;
}

}  // namespace rotdecon
