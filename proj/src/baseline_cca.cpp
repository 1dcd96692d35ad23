#include "pccmh/baseline_cca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pccmh/binio.hpp"

namespace pccmh {

namespace {

constexpr char kCcaMagic[] = "PCMHCCA";
constexpr std::uint32_t kCcaVersion = 1;

// Ridge-regularized inverse square root of a covariance block.
Matrix inv_sqrt(const Matrix& cov, double reg, const char* side) {
  const double tr = cov.trace();
  if (!(tr > 0.0)) {
    throw NumericError(ErrorKind::SingularCovariance,
                       std::string(side) + " covariance has zero trace (constant features)");
  }
  const double ridge = reg * tr / static_cast<double>(cov.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      cov + ridge * Matrix::Identity(cov.rows(), cov.cols()));
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError(ErrorKind::SingularCovariance,
                       std::string(side) + " covariance is singular beyond regularization");
  }
  const Vector scale = solver.eigenvalues().cwiseSqrt().cwiseInverse();
  return solver.eigenvectors() * scale.asDiagonal() * solver.eigenvectors().transpose();
}

double column_median(const Matrix& m, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, j);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CcaModel train_cca(const FeatureMatrix& x_corr, const FeatureMatrix& y_corr,
                   int c, double reg) {
  validate_features(x_corr, "cca x input");
  validate_features(y_corr, "cca y input");
  if (x_corr.rows() != y_corr.rows()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "paired inputs have " + std::to_string(x_corr.rows()) + " vs " +
                         std::to_string(y_corr.rows()) + " rows");
  }
  if (x_corr.rows() < 2) {
    throw InputError(ErrorKind::BadArgument, "need at least two paired rows");
  }
  if (c < 1 || c > std::min(x_corr.cols(), y_corr.cols())) {
    throw InputError(ErrorKind::BadArgument,
                     "code length must lie in [1, min(d_x, d_y) = " +
                         std::to_string(std::min(x_corr.cols(), y_corr.cols())) + "]");
  }
  if (!(reg > 0.0)) throw InputError(ErrorKind::BadArgument, "regularization must be positive");

  const double n = static_cast<double>(x_corr.rows());
  CcaModel model;
  model.c = c;
  model.regularization = reg;
  model.mean_x = x_corr.colwise().mean();
  model.mean_y = y_corr.colwise().mean();
  const Matrix xc = x_corr.rowwise() - model.mean_x;
  const Matrix yc = y_corr.rowwise() - model.mean_y;
  const Matrix cxx = xc.transpose() * xc / n;
  const Matrix cyy = yc.transpose() * yc / n;
  const Matrix cxy = xc.transpose() * yc / n;

  const Matrix wx_white = inv_sqrt(cxx, reg, "x");
  const Matrix wy_white = inv_sqrt(cyy, reg, "y");
  Eigen::JacobiSVD<Matrix> svd(wx_white * cxy * wy_white,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  model.w_x = wx_white * svd.matrixU().leftCols(c);
  model.w_y = wy_white * svd.matrixV().leftCols(c);
  model.correlations = svd.singularValues().head(c);

  // Deterministic column signs: largest-|entry| of each w_x column positive,
  // with the paired w_y column flipped alongside to keep the correlation.
  for (int j = 0; j < c; ++j) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < model.w_x.rows(); ++i) {
      const double a = std::abs(model.w_x(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (model.w_x(arg, j) < 0.0) {
      model.w_x.col(j) = -model.w_x.col(j);
      model.w_y.col(j) = -model.w_y.col(j);
    }
  }

  const Matrix px = xc * model.w_x;
  const Matrix py = yc * model.w_y;
  model.thresholds_x.resize(c);
  model.thresholds_y.resize(c);
  for (int j = 0; j < c; ++j) {
    model.thresholds_x(j) = column_median(px, j);
    model.thresholds_y(j) = column_median(py, j);
  }
  return model;
}

HashCodeSet encode_cca(const CcaModel& model, const FeatureMatrix& data, Modality mod) {
  validate_features(data, "cca encode input");
  const Matrix& w = mod == Modality::X ? model.w_x : model.w_y;
  const Eigen::RowVectorXd& mean = mod == Modality::X ? model.mean_x : model.mean_y;
  const Vector& thresholds = mod == Modality::X ? model.thresholds_x : model.thresholds_y;
  if (data.cols() != w.rows()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "data has " + std::to_string(data.cols()) + " dims, modality expects " +
                         std::to_string(w.rows()));
  }
  const Matrix scores =
      ((data.rowwise() - mean) * w).rowwise() - thresholds.transpose();
  return pack_scores(scores);
}

void save_cca(const std::string& path, const CcaModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  os.write(kCcaMagic, 7);
  bin::write_u32(os, kCcaVersion);
  bin::write_u32(os, static_cast<std::uint32_t>(model.c));
  bin::write_u32(os, static_cast<std::uint32_t>(model.w_x.rows()));
  bin::write_u32(os, static_cast<std::uint32_t>(model.w_y.rows()));
  bin::write_matrix_f64(os, model.w_x);
  bin::write_matrix_f64(os, model.w_y);
  bin::write_vector_f64(os, model.mean_x.transpose());
  bin::write_vector_f64(os, model.mean_y.transpose());
  bin::write_vector_f64(os, model.thresholds_x);
  bin::write_vector_f64(os, model.thresholds_y);
  bin::write_vector_f64(os, model.correlations);
  bin::write_f64(os, model.regularization);
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

CcaModel load_cca(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for reading");
  bin::expect_magic(is, kCcaMagic, path);
  const std::uint32_t version = bin::read_u32(is, "version");
  if (version != kCcaVersion) {
    throw InputError(ErrorKind::BadFileFormat,
                     path + ": unsupported version " + std::to_string(version));
  }
  CcaModel model;
  const std::uint32_t c = bin::read_u32(is, "code length");
  const std::uint32_t d_x = bin::read_u32(is, "x dim");
  const std::uint32_t d_y = bin::read_u32(is, "y dim");
  if (c == 0 || d_x == 0 || d_y == 0) {
    throw InputError(ErrorKind::BadFileFormat, path + ": zero dimension field");
  }
  model.c = static_cast<int>(c);
  model.w_x = bin::read_matrix_f64(is, d_x, c, "w_x");
  model.w_y = bin::read_matrix_f64(is, d_y, c, "w_y");
  model.mean_x = bin::read_vector_f64(is, d_x, "mean_x").transpose();
  model.mean_y = bin::read_vector_f64(is, d_y, "mean_y").transpose();
  model.thresholds_x = bin::read_vector_f64(is, c, "thresholds_x");
  model.thresholds_y = bin::read_vector_f64(is, c, "thresholds_y");
  model.correlations = bin::read_vector_f64(is, c, "correlations");
  model.regularization = bin::read_f64(is, "regularization");
  bin::expect_eof(is, path);
  return model;
}

}  // namespace pccmh
