#include "pccmh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "pccmh/binio.hpp"
#include "pccmh/rng.hpp"

namespace pccmh {

namespace {

constexpr char kModelMagic[] = "PCMHMDL";
constexpr std::uint32_t kModelVersion = 1;

// Eigenvalue magnitude and entry-spread cutoffs below which an eigenvector
// counts as the trivial constant-like null direction.
constexpr double kTrivialValueTol = 1e-7;
constexpr double kTrivialSpreadTol = 1e-6;

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(e.kind(), std::string(name) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(e.kind(), std::string(name) + ": " + e.what());
  }
}

void write_anchor_block(std::ostream& os, const AnchorSet& a) {
  bin::write_u32(os, static_cast<std::uint32_t>(a.centers.rows()));
  bin::write_u32(os, static_cast<std::uint32_t>(a.centers.cols()));
  bin::write_matrix_f64(os, a.centers);
}

AnchorSet read_anchor_block(std::istream& is, const std::string& path) {
  const std::uint32_t m = bin::read_u32(is, "anchor count");
  const std::uint32_t d = bin::read_u32(is, "anchor dim");
  if (m == 0 || d == 0) {
    throw InputError(ErrorKind::BadFileFormat, path + ": empty anchor block");
  }
  AnchorSet a;
  a.centers = bin::read_matrix_f64(is, m, d, "anchor centers");
  return a;
}

void write_model_payload(std::ostream& os, const HashModel& model) {
  os.write(kModelMagic, 7);
  bin::write_u32(os, kModelVersion);
  bin::write_u32(os, static_cast<std::uint32_t>(model.c));
  write_anchor_block(os, model.anchors_x);
  write_anchor_block(os, model.anchors_y);
  bin::write_f64(os, model.sigma_x);
  bin::write_f64(os, model.sigma_y);
  bin::write_matrix_f64(os, model.b_x);
  bin::write_matrix_f64(os, model.b_y);
  bin::write_vector_f64(os, model.thresholds_x);
  bin::write_vector_f64(os, model.thresholds_y);
  bin::write_f64(os, model.meta.lambda);
  bin::write_u64(os, model.meta.seed);
  bin::write_f64(os, model.meta.corr_ratio);
  bin::write_u32(os, static_cast<std::uint32_t>(model.meta.s_nearest));
  bin::write_u32(os, static_cast<std::uint32_t>(model.meta.sigma_mode));
  bin::write_u32(os, static_cast<std::uint32_t>(model.meta.threshold_rule));
  bin::write_u32(os, static_cast<std::uint32_t>(model.meta.eig_rule));
  bin::write_u32(os, model.meta.n_train_x);
  bin::write_u32(os, model.meta.n_train_y);
  bin::write_u32(os, model.meta.n_corr);
}

HashModel read_model_payload(std::istream& is, const std::string& path) {
  bin::expect_magic(is, kModelMagic, path);
  const std::uint32_t version = bin::read_u32(is, "version");
  if (version != kModelVersion) {
    throw InputError(ErrorKind::BadFileFormat,
                     path + ": unsupported version " + std::to_string(version));
  }
  HashModel model;
  const std::uint32_t c = bin::read_u32(is, "code length");
  if (c == 0) throw InputError(ErrorKind::BadFileFormat, path + ": zero code length");
  model.c = static_cast<int>(c);
  model.anchors_x = read_anchor_block(is, path);
  model.anchors_y = read_anchor_block(is, path);
  model.sigma_x = bin::read_f64(is, "sigma_x");
  model.sigma_y = bin::read_f64(is, "sigma_y");
  model.b_x = bin::read_matrix_f64(is, model.anchors_x.centers.rows(), c, "b_x");
  model.b_y = bin::read_matrix_f64(is, model.anchors_y.centers.rows(), c, "b_y");
  model.thresholds_x = bin::read_vector_f64(is, c, "thresholds_x");
  model.thresholds_y = bin::read_vector_f64(is, c, "thresholds_y");
  model.meta.lambda = bin::read_f64(is, "lambda");
  model.meta.seed = bin::read_u64(is, "seed");
  model.meta.corr_ratio = bin::read_f64(is, "corr_ratio");
  model.meta.s_nearest = static_cast<int>(bin::read_u32(is, "s_nearest"));
  const std::uint32_t sigma_mode = bin::read_u32(is, "sigma_mode");
  const std::uint32_t threshold_rule = bin::read_u32(is, "threshold_rule");
  const std::uint32_t eig_rule = bin::read_u32(is, "eig_rule");
  if (sigma_mode > 1 || threshold_rule > 1 || eig_rule > 1) {
    throw InputError(ErrorKind::BadFileFormat, path + ": enum field out of range");
  }
  model.meta.sigma_mode = static_cast<SigmaMode>(sigma_mode);
  model.meta.threshold_rule = static_cast<ThresholdRule>(threshold_rule);
  model.meta.eig_rule = static_cast<EigRule>(eig_rule);
  model.meta.n_train_x = bin::read_u32(is, "n_train_x");
  model.meta.n_train_y = bin::read_u32(is, "n_train_y");
  model.meta.n_corr = bin::read_u32(is, "n_corr");
  model.meta.m_x = model.anchors_x.m();
  model.meta.m_y = model.anchors_y.m();
  bin::expect_eof(is, path);
  return model;
}

}  // namespace

BlockSystem build_block_matrices(const AnchorGraph& gx, const AnchorGraph& gy,
                                 std::size_t n_corr, double lambda) {
  if (n_corr < 1) {
    throw InputError(ErrorKind::BadArgument, "at least one corresponded pair required");
  }
  if (static_cast<Eigen::Index>(n_corr) > gx.n() ||
      static_cast<Eigen::Index>(n_corr) > gy.n()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "n_corr = " + std::to_string(n_corr) + " exceeds graph rows (" +
                         std::to_string(gx.n()) + ", " + std::to_string(gy.n()) + ")");
  }
  if (lambda < 0.0) {
    throw InputError(ErrorKind::BadArgument, "lambda must be nonnegative");
  }

  const Eigen::Index m_x = gx.m();
  const Eigen::Index m_y = gy.m();
  const auto zx = gx.z.topRows(static_cast<Eigen::Index>(n_corr));
  const auto zy = gy.z.topRows(static_cast<Eigen::Index>(n_corr));

  BlockSystem sys;
  sys.lambda = lambda;
  sys.m_x = static_cast<int>(m_x);
  sys.m_y = static_cast<int>(m_y);
  sys.corr_block.resize(m_x + m_y, m_x + m_y);
  sys.corr_block.topLeftCorner(m_x, m_x) = zx.transpose() * zx;
  sys.corr_block.topRightCorner(m_x, m_y) = -(zx.transpose() * zy);
  sys.corr_block.bottomLeftCorner(m_y, m_x) = sys.corr_block.topRightCorner(m_x, m_y).transpose();
  sys.corr_block.bottomRightCorner(m_y, m_y) = zy.transpose() * zy;

  sys.lap_block = Matrix::Zero(m_x + m_y, m_x + m_y);
  sys.lap_block.topLeftCorner(m_x, m_x) = reduced_laplacian(gx).matrix;
  sys.lap_block.bottomRightCorner(m_y, m_y) = reduced_laplacian(gy).matrix;
  return sys;
}

EigenPairs solve_eigen(const Matrix& symmetric, int k) {
  if (symmetric.rows() != symmetric.cols() || symmetric.rows() < 1) {
    throw InputError(ErrorKind::BadArgument, "eigensolve needs a nonempty square matrix");
  }
  if (k < 1 || k > symmetric.rows()) {
    throw InputError(ErrorKind::BadArgument,
                     "k = " + std::to_string(k) + " out of range [1, " +
                         std::to_string(symmetric.rows()) + "]");
  }
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  const double asym = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    throw InputError(ErrorKind::NonSymmetric,
                     "matrix asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (symmetric + symmetric.transpose()));
  if (solver.info() != Eigen::Success) {
    throw NumericError(ErrorKind::InsufficientEigenpairs,
                       "eigendecomposition did not converge");
  }
  EigenPairs out;
  out.values = solver.eigenvalues().head(k);
  out.vectors = solver.eigenvectors().leftCols(k);
  return out;
}

EigenPairs solve_eigen(const BlockSystem& sys, int k) {
  return solve_eigen(sys.combined(), k);
}

void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
}

ExtractResult extract_model(const EigenPairs& eig, int c, int m_x, EigRule rule) {
  const Eigen::Index total = eig.vectors.rows();
  if (c < 1) throw InputError(ErrorKind::BadArgument, "code length must be positive");
  if (m_x < 1 || m_x >= total) {
    throw InputError(ErrorKind::BadArgument, "m_x must split the eigenvector rows");
  }
  const int needed = rule == EigRule::TwoCSplit ? 2 * c : c;

  Matrix fixed = eig.vectors;
  std::vector<int> nontrivial;
  for (Eigen::Index j = 0; j < fixed.cols(); ++j) {
    fix_sign(fixed.col(j));
    const bool small_value = std::abs(eig.values(j)) <= kTrivialValueTol;
    const double spread = fixed.col(j).maxCoeff() - fixed.col(j).minCoeff();
    if (small_value && spread <= kTrivialSpreadTol) continue;
    nontrivial.push_back(static_cast<int>(j));
  }
  if (static_cast<int>(nontrivial.size()) < needed) {
    throw NumericError(ErrorKind::InsufficientEigenpairs,
                       "only " + std::to_string(nontrivial.size()) +
                           " non-trivial eigenpairs available, need " + std::to_string(needed));
  }

  ExtractResult out;
  out.selected.assign(nontrivial.begin(), nontrivial.begin() + needed);
  out.b_x.resize(m_x, c);
  out.b_y.resize(total - m_x, c);
  for (int j = 0; j < c; ++j) {
    const int xcol = out.selected[static_cast<std::size_t>(j)];
    const int ycol = rule == EigRule::TwoCSplit
                         ? out.selected[static_cast<std::size_t>(c + j)]
                         : xcol;
    out.b_x.col(j) = fixed.col(xcol).head(m_x);
    out.b_y.col(j) = fixed.col(ycol).tail(total - m_x);
  }
  for (int j = 0; j < c; ++j) {
    if (out.b_x.col(j).cwiseAbs().maxCoeff() <= 1e-12 ||
        out.b_y.col(j).cwiseAbs().maxCoeff() <= 1e-12) {
      throw NumericError(ErrorKind::InsufficientEigenpairs,
                         "selected eigenvector " + std::to_string(j) +
                             " is all-zero for one modality (constant bit)");
    }
  }
  return out;
}

Vector compute_thresholds(const AnchorGraph& g, const Matrix& b) {
  if (g.m() != b.rows()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "projection has " + std::to_string(b.rows()) + " rows, graph " +
                         std::to_string(g.m()) + " anchors");
  }
  return (g.z * b).colwise().mean().transpose();
}

HashModel train(const MultiModalDataset& ds, const TrainConfig& cfg) {
  if (ds.n_corr < 1) {
    throw InputError(ErrorKind::BadArgument,
                     "training requires at least one corresponded pair");
  }
  if (cfg.c < 1) throw InputError(ErrorKind::BadArgument, "code length must be positive");
  if (cfg.lambda < 0.0) throw InputError(ErrorKind::BadArgument, "lambda must be nonnegative");
  validate_features(ds.x, "modality x");
  validate_features(ds.y, "modality y");
  if (static_cast<Eigen::Index>(ds.n_corr) > ds.x.rows() ||
      static_cast<Eigen::Index>(ds.n_corr) > ds.y.rows()) {
    throw InputError(ErrorKind::BadArgument, "n_corr exceeds a modality's row count");
  }

  const AnchorSet anchors_x = stage("anchors_x", [&] {
    return kmeans_fit(ds.x, cfg.m_x, rng::mix(cfg.seed, 1), cfg.kmeans_max_iters);
  });
  const AnchorSet anchors_y = stage("anchors_y", [&] {
    return kmeans_fit(ds.y, cfg.m_y, rng::mix(cfg.seed, 2), cfg.kmeans_max_iters);
  });

  double sigma_x = cfg.sigma_x;
  double sigma_y = cfg.sigma_y;
  if (cfg.sigma_mode == SigmaMode::Auto) {
    sigma_x = estimate_sigma(ds.x, anchors_x);
    sigma_y = estimate_sigma(ds.y, anchors_y);
  } else if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
    throw InputError(ErrorKind::BadArgument, "fixed sigma values must be positive");
  }

  const AnchorGraph gx = stage("graph_x", [&] {
    return compute_z(ds.x, anchors_x, sigma_x, cfg.s_nearest);
  });
  const AnchorGraph gy = stage("graph_y", [&] {
    return compute_z(ds.y, anchors_y, sigma_y, cfg.s_nearest);
  });

  const BlockSystem sys = stage("block_system", [&] {
    return build_block_matrices(gx, gy, ds.n_corr, cfg.lambda);
  });
  const EigenPairs eig = stage("eigensolve", [&] {
    return solve_eigen(sys, static_cast<int>(sys.corr_block.rows()));
  });
  const ExtractResult ext = stage("extract", [&] {
    return extract_model(eig, cfg.c, sys.m_x, cfg.eig_rule);
  });

  HashModel model;
  model.anchors_x = anchors_x;
  model.anchors_y = anchors_y;
  model.sigma_x = sigma_x;
  model.sigma_y = sigma_y;
  model.b_x = ext.b_x;
  model.b_y = ext.b_y;
  model.c = cfg.c;
  if (cfg.threshold_rule == ThresholdRule::Mean) {
    model.thresholds_x = stage("thresholds", [&] { return compute_thresholds(gx, model.b_x); });
    model.thresholds_y = stage("thresholds", [&] { return compute_thresholds(gy, model.b_y); });
  } else {
    model.thresholds_x = Vector::Zero(cfg.c);
    model.thresholds_y = Vector::Zero(cfg.c);
  }
  model.meta.lambda = cfg.lambda;
  model.meta.m_x = anchors_x.m();
  model.meta.m_y = anchors_y.m();
  model.meta.seed = cfg.seed;
  model.meta.corr_ratio = static_cast<double>(ds.n_corr) /
                          static_cast<double>(std::min(ds.x.rows(), ds.y.rows()));
  model.meta.s_nearest = cfg.s_nearest;
  model.meta.sigma_mode = cfg.sigma_mode;
  model.meta.threshold_rule = cfg.threshold_rule;
  model.meta.eig_rule = cfg.eig_rule;
  model.meta.n_train_x = static_cast<std::uint32_t>(ds.x.rows());
  model.meta.n_train_y = static_cast<std::uint32_t>(ds.y.rows());
  model.meta.n_corr = static_cast<std::uint32_t>(ds.n_corr);
  return model;
}

void save_model(const std::string& path, const HashModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  write_model_payload(os, model);
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

HashModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for reading");
  return read_model_payload(is, path);
}

std::string serialize_model(const HashModel& model) {
  std::ostringstream os(std::ios::binary);
  write_model_payload(os, model);
  return os.str();
}

}  // namespace pccmh
