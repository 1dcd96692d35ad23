#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pccmh/anchor_graph.hpp"
#include "pccmh/datamodel.hpp"

namespace pccmh {

enum class SigmaMode : std::uint32_t { Auto = 0, Fixed = 1 };
enum class ThresholdRule : std::uint32_t { Mean = 0, Zero = 1 };
// SmallestC: hash projections are the c smallest non-trivial eigenvectors.
// TwoCSplit: experimentation rule; x-projections from the first c non-trivial
// eigenvectors, y-projections from the next c.
enum class EigRule : std::uint32_t { SmallestC = 0, TwoCSplit = 1 };

struct TrainConfig {
  int m_x = 200;
  int m_y = 200;
  int c = 16;
  double lambda = 0.6;
  SigmaMode sigma_mode = SigmaMode::Auto;
  double sigma_x = 0.0;  // used when sigma_mode == Fixed
  double sigma_y = 0.0;
  int s_nearest = 0;  // 0 = dense kernel rows
  std::uint64_t seed = 0;
  int kmeans_max_iters = 100;
  ThresholdRule threshold_rule = ThresholdRule::Mean;
  EigRule eig_rule = EigRule::SmallestC;
};

// Coupled system over stacked anchor coordinates [x-block; y-block].
// corr_block = C^T C for C = [Zx_corr, -Zy_corr] over corresponded rows;
// lap_block = blockdiag(Lx, Ly). Minimizing b^T (corr + lambda*lap) b drives
// the two modalities' codes together while staying smooth per modality.
struct BlockSystem {
  Matrix corr_block;  // (m_x+m_y) × (m_x+m_y), symmetric PSD
  Matrix lap_block;   // same shape, blockdiag of reduced Laplacians
  double lambda = 0.0;
  int m_x = 0;
  int m_y = 0;
  Matrix combined() const { return corr_block + lambda * lap_block; }
};

struct EigenPairs {
  Vector values;   // ascending
  Matrix vectors;  // columns, orthonormal, aligned with values
};

struct ModelMeta {
  double lambda = 0.6;
  int m_x = 0;
  int m_y = 0;
  std::uint64_t seed = 0;
  double corr_ratio = 0.0;  // n_corr / min(n_x, n_y) at training time
  int s_nearest = 0;
  SigmaMode sigma_mode = SigmaMode::Auto;
  ThresholdRule threshold_rule = ThresholdRule::Mean;
  EigRule eig_rule = EigRule::SmallestC;
  std::uint32_t n_train_x = 0;
  std::uint32_t n_train_y = 0;
  std::uint32_t n_corr = 0;
};

// Trained hashing artifact: out-of-sample codes for modality x are
// sgn(kernel_row(x) * b_x - thresholds_x), elementwise, with sgn(0) = +1.
struct HashModel {
  AnchorSet anchors_x;
  AnchorSet anchors_y;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  Matrix b_x;  // m_x × c
  Matrix b_y;  // m_y × c
  Vector thresholds_x;  // c
  Vector thresholds_y;
  int c = 0;
  ModelMeta meta;
};

BlockSystem build_block_matrices(const AnchorGraph& gx, const AnchorGraph& gy,
                                 std::size_t n_corr, double lambda);

// k smallest eigenpairs of a symmetric matrix, values ascending, vectors
// orthonormal. Backed by a dense self-adjoint decomposition.
EigenPairs solve_eigen(const Matrix& symmetric, int k);
EigenPairs solve_eigen(const BlockSystem& sys, int k);

// Flips v so its largest-magnitude entry (lowest index on ties) is positive.
void fix_sign(Eigen::Ref<Vector> v);

struct ExtractResult {
  Matrix b_x;
  Matrix b_y;
  std::vector<int> selected;  // indices into the supplied eigenpairs
};

// Drops trivial eigenvectors (|value| <= 1e-7 and near-constant entries after
// sign fixing), takes the next eigenvectors in ascending order per the rule,
// and splits rows into the x and y blocks.
ExtractResult extract_model(const EigenPairs& eig, int c, int m_x,
                            EigRule rule = EigRule::SmallestC);

// Per-bit mean of the training projections z*b.
Vector compute_thresholds(const AnchorGraph& g, const Matrix& b);

// Full pipeline: k-means anchors per modality, anchor graphs, reduced
// Laplacians, block system, eigensolve, extraction, thresholds.
// Deterministic under cfg.seed. Stage failures are rethrown with the stage
// name prefixed.
HashModel train(const MultiModalDataset& ds, const TrainConfig& cfg);

// Model file: magic "PCMHMDL", u32 version=1, then anchors, bandwidths,
// projections, thresholds and meta; all numeric payloads little-endian f64
// (counts u32, seed u64). Reload is bit-exact.
void save_model(const std::string& path, const HashModel& model);
HashModel load_model(const std::string& path);
std::string serialize_model(const HashModel& model);  // same bytes as save_model

}  // namespace pccmh
