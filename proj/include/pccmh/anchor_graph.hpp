#pragma once

#include "pccmh/anchors.hpp"

namespace pccmh {

// Anchor-based similarity graph for one modality. z holds the row-normalized
// Gaussian kernel between items and anchors; col_sums is the diagonal of
// Lambda = diag(z^T 1).
struct AnchorGraph {
  Matrix z;         // n × m, rows sum to 1, entries >= 0
  Vector col_sums;  // m, all > 0
  double sigma = 0.0;
  int s_nearest = 0;  // 0 = dense rows
  AnchorSet anchors;
  Eigen::Index n() const { return z.rows(); }
  Eigen::Index m() const { return z.cols(); }
};

// m×m symmetric PSD matrix encoding the smoothness quadratic form in anchor
// coordinates; annihilates the constant vector.
struct ReducedLaplacian {
  Matrix matrix;
};

// Mean squared distance from each item to its nearest anchor, floored at
// 1e-12. Default bandwidth when none is configured.
double estimate_sigma(const FeatureMatrix& data, const AnchorSet& anchors);

// One normalized kernel row: exp(-||x - u_j||^2 / sigma) over anchors,
// optionally truncated to the s nearest anchors, divided by the row sum.
// `row_index` only labels the ZeroRowSimilarity error.
Vector kernel_row(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                  const Matrix& centers, double sigma, int s_nearest,
                  Eigen::Index row_index);

AnchorGraph compute_z(const FeatureMatrix& data, const AnchorSet& anchors,
                      double sigma, int s_nearest = 0);

// Dense n×n approximate affinity z Lambda^-1 z^T. Test/oracle use only;
// guarded at n <= 2000.
Matrix approx_affinity(const AnchorGraph& g);

// z^T z - z^T z Lambda^-1 z^T z.
ReducedLaplacian reduced_laplacian(const AnchorGraph& g);

}  // namespace pccmh
