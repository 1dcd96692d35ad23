#include "pccmh/anchor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace pccmh {

namespace {

void check_dims(const FeatureMatrix& data, const AnchorSet& anchors) {
  if (anchors.centers.rows() < 1) {
    throw InputError(ErrorKind::BadArgument, "anchor set is empty");
  }
  if (data.cols() != anchors.centers.cols()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "data has " + std::to_string(data.cols()) + " dims, anchors " +
                         std::to_string(anchors.centers.cols()));
  }
}

}  // namespace

double estimate_sigma(const FeatureMatrix& data, const AnchorSet& anchors) {
  validate_features(data, "sigma estimation input");
  check_dims(data, anchors);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double best = (data.row(i) - anchors.centers.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < anchors.centers.rows(); ++k) {
      best = std::min(best, (data.row(i) - anchors.centers.row(k)).squaredNorm());
    }
    total += best;
  }
  return std::max(total / static_cast<double>(data.rows()), 1e-12);
}

Vector kernel_row(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                  const Matrix& centers, double sigma, int s_nearest,
                  Eigen::Index row_index) {
  const Eigen::Index m = centers.rows();
  Vector raw(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    raw(j) = std::exp(-(x - centers.row(j)).squaredNorm() / sigma);
  }
  if (s_nearest > 0 && s_nearest < m) {
    // Keep the s nearest anchors (largest kernel values), ties to the lowest
    // anchor index, and zero the rest.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::partial_sort(idx.begin(), idx.begin() + s_nearest, idx.end(),
                      [&raw](Eigen::Index a, Eigen::Index b) {
                        if (raw(a) != raw(b)) return raw(a) > raw(b);
                        return a < b;
                      });
    Vector kept = Vector::Zero(m);
    for (int t = 0; t < s_nearest; ++t) kept(idx[static_cast<std::size_t>(t)]) = raw(idx[static_cast<std::size_t>(t)]);
    raw = std::move(kept);
  }
  const double sum = raw.sum();
  if (!(sum > 0.0)) {
    throw NumericError(ErrorKind::ZeroRowSimilarity,
                       "row " + std::to_string(row_index) +
                           ": similarity to every anchor underflowed to zero (sigma too small?)");
  }
  return raw / sum;
}

AnchorGraph compute_z(const FeatureMatrix& data, const AnchorSet& anchors,
                      double sigma, int s_nearest) {
  validate_features(data, "anchor graph input");
  check_dims(data, anchors);
  if (!(sigma > 0.0)) {
    throw InputError(ErrorKind::BadArgument, "sigma must be positive");
  }
  const Eigen::Index m = anchors.centers.rows();
  if (s_nearest < 0 || s_nearest > m) {
    throw InputError(ErrorKind::BadArgument,
                     "s_nearest must lie in [0, " + std::to_string(m) + "]");
  }

  AnchorGraph g;
  g.z.resize(data.rows(), m);
  g.sigma = sigma;
  g.s_nearest = s_nearest;
  g.anchors = anchors;

  // Rows are independent; failures are collected and the lowest row wins so
  // the error does not depend on the thread schedule.
  std::vector<std::string> row_error(static_cast<std::size_t>(data.rows()));
  parallel_for(data.rows(), [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      try {
        g.z.row(i) = kernel_row(data.row(i), anchors.centers, sigma, s_nearest, i).transpose();
      } catch (const Error& e) {
        row_error[static_cast<std::size_t>(i)] = e.what();
      }
    }
  });
  for (const std::string& err : row_error) {
    if (!err.empty()) throw NumericError(ErrorKind::ZeroRowSimilarity, err);
  }

  g.col_sums = g.z.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(g.col_sums(j) > 0.0)) {
      throw NumericError(ErrorKind::OrphanAnchor,
                         "anchor " + std::to_string(j) + " receives zero total similarity");
    }
  }
  return g;
}

Matrix approx_affinity(const AnchorGraph& g) {
  if (g.n() > 2000) {
    throw InputError(ErrorKind::SizeGuardExceeded,
                     "approx_affinity materializes n x n; n = " + std::to_string(g.n()) +
                         " exceeds the 2000-row guard");
  }
  const Matrix scaled = g.z * g.col_sums.cwiseInverse().asDiagonal();
  return scaled * g.z.transpose();
}

ReducedLaplacian reduced_laplacian(const AnchorGraph& g) {
  const Matrix ztz = g.z.transpose() * g.z;
  Matrix l = ztz - ztz * g.col_sums.cwiseInverse().asDiagonal() * ztz;
  l = 0.5 * (l + l.transpose()).eval();
  return ReducedLaplacian{std::move(l)};
}

}  // namespace pccmh
