#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pccmh/common.hpp"

namespace pccmh {

// Dense feature matrix, rows = items, cols = feature dimensions. Invariants
// (rows >= 1, cols >= 1, all finite) are enforced at the I/O and generation
// boundaries via validate_features.
using FeatureMatrix = Matrix;

struct MultiModalDataset {
  FeatureMatrix x;  // n_x × d_x
  FeatureMatrix y;  // n_y × d_y
  // Corresponded pairs occupy rows 0..n_corr-1 of both modalities: row i of x
  // and row i of y describe the same object.
  std::size_t n_corr = 0;
  std::vector<int> labels_x;  // empty when absent
  std::vector<int> labels_y;
};

struct SyntheticSpec {
  int n_clusters = 5;
  int points_per_cluster = 100;
  int d_x = 20;
  int d_y = 15;
  double noise_std = 0.3;
  double corr_ratio = 1.0;  // in [0,1]
  std::uint64_t seed = 0;
};

enum class MatrixFormat { Csv, Binary };

// Throws InputError (NonFiniteValue / BadArgument) when the FeatureMatrix
// invariants fail; `what` names the matrix in messages.
void validate_features(const FeatureMatrix& m, const std::string& what);

// CSV: first line "rows,cols", then one comma-separated row per line,
// written with 17 significant digits.
// Binary: magic "PCMH", u32 version=1, u32 rows, u32 cols (little-endian),
// then rows*cols little-endian f32, row-major.
FeatureMatrix load_feature_matrix(const std::string& path, MatrixFormat format);
void save_feature_matrix(const std::string& path, const FeatureMatrix& m,
                         MatrixFormat format);

// One integer per line; line i labels item i.
std::vector<int> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<int>& labels);

// Deterministic under seed. Corresponded pairs move as units; the leftover
// (non-corresponded) rows of each modality are split independently. Both
// output datasets keep pairs in rows 0..n_corr-1 and carry labels through.
std::pair<MultiModalDataset, MultiModalDataset> split_dataset(
    const MultiModalDataset& ds, double train_fraction, std::uint64_t seed);

// Cluster-structured two-modality data. Shared latent points live near one of
// n_clusters centers; modality X observes them through a fixed random linear
// map to d_x dims plus N(0, noise_std^2) noise, modality Y through another
// map to d_y dims. The first floor(corr_ratio*n) rows of both modalities
// share a latent point; remaining rows get independent latent draws per
// modality. labels = cluster index (identical sequence in both modalities).
MultiModalDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace pccmh
