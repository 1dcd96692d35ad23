#include "pccmh/anchors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "pccmh/rng.hpp"

namespace pccmh {

namespace {

// Lexicographic row order. Equal rows compare equal, which is fine: every
// loop below only consumes row values, so any order among duplicates yields
// the same arithmetic.
std::vector<Eigen::Index> canonical_order(const FeatureMatrix& data) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&data](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (data(a, j) != data(b, j)) return data(a, j) < data(b, j);
    }
    return false;
  });
  return order;
}

}  // namespace

AnchorSet kmeans_fit(const FeatureMatrix& data, int m, std::uint64_t seed,
                     int max_iters) {
  validate_features(data, "kmeans input");
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (m < 1) throw InputError(ErrorKind::BadArgument, "anchor count must be positive");
  if (m > n) {
    throw InputError(ErrorKind::AnchorCountExceedsData,
                     "anchor count " + std::to_string(m) + " exceeds " +
                         std::to_string(n) + " data rows");
  }
  if (max_iters < 1) throw InputError(ErrorKind::BadArgument, "max_iters must be positive");

  const std::vector<Eigen::Index> order = canonical_order(data);
  rng::Engine eng(seed);

  // k-means++ over the canonical sequence.
  Matrix centers(m, d);
  centers.row(0) = data.row(order[rng::uniform_index(eng, order.size())]);
  Vector d2(n);
  for (Eigen::Index t = 0; t < n; ++t)
    d2(t) = (data.row(order[static_cast<std::size_t>(t)]) - centers.row(0)).squaredNorm();
  for (int k = 1; k < m; ++k) {
    const double total = d2.sum();
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng::uniform_index(eng, order.size());
    } else {
      const double r = rng::uniform01(eng) * total;
      double cum = 0.0;
      pick = order.size() - 1;
      for (Eigen::Index t = 0; t < n; ++t) {
        cum += d2(t);
        if (cum >= r) {
          pick = static_cast<std::size_t>(t);
          break;
        }
      }
    }
    centers.row(k) = data.row(order[pick]);
    for (Eigen::Index t = 0; t < n; ++t) {
      const double dist =
          (data.row(order[static_cast<std::size_t>(t)]) - centers.row(k)).squaredNorm();
      d2(t) = std::min(d2(t), dist);
    }
  }

  AnchorSet result;
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  std::vector<int> prev_assign;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step over the canonical sequence; cost recorded per
    // iteration is the assignment cost with the current centers.
    double cost = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto row = data.row(order[static_cast<std::size_t>(t)]);
      int best = 0;
      double best_d = (row - centers.row(0)).squaredNorm();
      for (int k = 1; k < m; ++k) {
        const double dist = (row - centers.row(k)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = k;
        }
      }
      assign[static_cast<std::size_t>(t)] = best;
      cost += best_d;
    }
    result.inertia_trace.push_back(cost);
    result.inertia = cost;
    if (assign == prev_assign) break;
    prev_assign = assign;

    // Update step, accumulating in the canonical sequence.
    Matrix sums = Matrix::Zero(m, d);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(m), 0);
    for (Eigen::Index t = 0; t < n; ++t) {
      const int k = assign[static_cast<std::size_t>(t)];
      sums.row(k) += data.row(order[static_cast<std::size_t>(t)]);
      ++counts[static_cast<std::size_t>(k)];
    }
    std::vector<bool> reused(static_cast<std::size_t>(n), false);
    for (int k = 0; k < m; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        centers.row(k) = sums.row(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
        continue;
      }
      // Empty cluster: re-seed with the point farthest from its own center.
      Eigen::Index far_t = -1;
      double far_d = -1.0;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (reused[static_cast<std::size_t>(t)]) continue;
        const int a = assign[static_cast<std::size_t>(t)];
        const double dist =
            (data.row(order[static_cast<std::size_t>(t)]) - centers.row(a)).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far_t = t;
        }
      }
      centers.row(k) = data.row(order[static_cast<std::size_t>(far_t)]);
      reused[static_cast<std::size_t>(far_t)] = true;
    }
  }
  result.centers = std::move(centers);
  return result;
}

std::vector<int> assign_nearest(const FeatureMatrix& data, const AnchorSet& anchors) {
  validate_features(data, "assign input");
  if (data.cols() != anchors.centers.cols()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "data has " + std::to_string(data.cols()) + " dims, anchors " +
                         std::to_string(anchors.centers.cols()));
  }
  std::vector<int> out(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    int best = 0;
    double best_d = (data.row(i) - anchors.centers.row(0)).squaredNorm();
    for (int k = 1; k < anchors.m(); ++k) {
      const double dist = (data.row(i) - anchors.centers.row(k)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace pccmh
