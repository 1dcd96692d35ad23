#pragma once

#include <string>

#include "pccmh/encoder.hpp"

namespace pccmh {

// Regularized CCA baseline. Hashing side is sign-of-projection with
// column-median thresholds; only the corresponded pairs enter training.
struct CcaModel {
  Matrix w_x;  // d_x × c, columns ordered by descending correlation
  Matrix w_y;  // d_y × c
  Eigen::RowVectorXd mean_x;
  Eigen::RowVectorXd mean_y;
  Vector thresholds_x;  // c, medians of the training projections
  Vector thresholds_y;
  Vector correlations;  // c, descending, each in [0, 1 + 1e-8]
  double regularization = 0.0;
  int c = 0;
};

// Whitens both covariance blocks (ridge reg scaled by trace/dim), then reads
// the canonical directions off the SVD of the whitened cross-covariance.
// Rows of x_corr and y_corr are paired.
CcaModel train_cca(const FeatureMatrix& x_corr, const FeatureMatrix& y_corr,
                   int c, double reg = 1e-4);

HashCodeSet encode_cca(const CcaModel& model, const FeatureMatrix& data,
                       Modality mod);

// Model-file envelope as the hashing model, magic "PCMHCCA".
void save_cca(const std::string& path, const CcaModel& model);
CcaModel load_cca(const std::string& path);

}  // namespace pccmh
