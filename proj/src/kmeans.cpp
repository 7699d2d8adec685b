#include "rotdecon/kmeans.hpp"

#include "rotdecon/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rotdecon {

namespace {

int nearest(const Vector& centers, double x) {
  int best = 0;
  double bd = std::abs(x - centers(0));
  for (int c = 1; c < centers.size(); ++c) {
    const double dd = std::abs(x - centers(c));
    if (dd < bd) {
      bd = dd;
      best = c;
    }
  }
  return best;
}

Vector seed_plus_plus(const std::vector<double>& xs, int k, Rng& rng) {
  const auto n = xs.size();
  Vector c(k);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  c(0) = xs[pick(rng)];
  std::vector<double> d2(n);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (int t = 0; t < j; ++t) m = std::min(m, (xs[i] - c(t)) * (xs[i] - c(t)));
      d2[i] = m;
      total += m;
    }
    if (total <= 0.0) {
      c(j) = xs[pick(rng)];
      continue;
    }
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= u) {
        chosen = i;
        break;
      }
    }
    c(j) = xs[chosen];
  }
  return c;
}

}  // namespace

KMeansResult kmeans_1d(const std::vector<double>& xs, int k, Rng& rng, int restarts, int max_iter) {
  if (k < 1) throw DomainError("kmeans_1d: k must be positive");
  if (xs.size() < static_cast<std::size_t>(k)) throw DomainError("kmeans_1d: fewer points than clusters");
  const auto n = xs.size();
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Vector c = seed_plus_plus(xs, k, rng);
    std::vector<int> lab(n, -1);
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        const int l = nearest(c, xs[i]);
        if (l != lab[i]) {
          lab[i] = l;
          changed = true;
        }
      }
      Vector sum = Vector::Zero(k);
      Vector cnt = Vector::Zero(k);
      for (std::size_t i = 0; i < n; ++i) {
        sum(lab[i]) += xs[i];
        cnt(lab[i]) += 1.0;
      }
      for (int j = 0; j < k; ++j) {
        if (cnt(j) > 0.0) {
          c(j) = sum(j) / cnt(j);
        } else {
          // Empty cluster: move it to the worst-served point.
          std::size_t far = 0;
          double fd = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dd = std::abs(xs[i] - c(lab[i]));
            if (dd > fd) {
              fd = dd;
              far = i;
            }
          }
          c(j) = xs[far];
          changed = true;
        }
      }
      if (!changed) break;
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lab[i] = nearest(c, xs[i]);
      inertia += (xs[i] - c(lab[i])) * (xs[i] - c(lab[i]));
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.centers = c;
      best.labels = lab;
    }
  }
  // Sort centers and relabel.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return best.centers(a) < best.centers(b); });
  std::vector<int> rank(k);
  Vector sorted(k);
  for (int j = 0; j < k; ++j) {
    rank[order[j]] = j;
    sorted(j) = best.centers(order[j]);
  }
  best.centers = sorted;
  for (auto& l : best.labels) l = rank[l];
  return best;
}

}  // namespace rotdecon
