#pragma once

#include "rotdecon/types.hpp"

#include <vector>

namespace rotdecon {

struct KMeansResult {
  Vector centers;          ///< sorted ascending
  std::vector<int> labels;
  double inertia{};
};

/// One-dimensional k-means: Lloyd iterations from k-means++ seeds, best of
/// `restarts` by inertia (first one wins ties).
KMeansResult kmeans_1d(const std::vector<double>& xs, int k, Rng& rng, int restarts = 20, int max_iter = 300);

}  // namespace rotdecon
