#pragma once

#include <cstdint>
#include <vector>

#include "pccmh/datamodel.hpp"

namespace pccmh {

struct AnchorSet {
  Matrix centers;  // m × d
  double inertia = 0.0;
  // Per-iteration assignment cost; non-increasing by Lloyd monotonicity.
  std::vector<double> inertia_trace;
  int m() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

// Lloyd's algorithm with k-means++ seeding. Deterministic under seed, and
// invariant to row permutations of `data`: all sampling and accumulation runs
// over a canonical (lexicographically sorted) row order, so a shuffled input
// yields bit-identical centers. Empty clusters are re-seeded with the point
// farthest from its current center. Ties break toward the lowest index.
AnchorSet kmeans_fit(const FeatureMatrix& data, int m, std::uint64_t seed,
                     int max_iters = 100);

// Index of the nearest center per row (Euclidean, ties to lowest index).
std::vector<int> assign_nearest(const FeatureMatrix& data, const AnchorSet& anchors);

}  // namespace pccmh
