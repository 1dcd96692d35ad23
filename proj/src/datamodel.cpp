#include "pccmh/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pccmh/binio.hpp"
#include "pccmh/rng.hpp"

namespace pccmh {

namespace {

constexpr char kFeatureMagic[] = "PCMH";
constexpr std::uint32_t kFeatureVersion = 1;

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for reading");
  return is;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  return os;
}

// Strict double parse of one CSV field; advances *pos past the value.
double parse_field(const std::string& line, std::size_t* pos,
                   const std::string& path, std::size_t lineno) {
  const char* begin = line.c_str() + *pos;
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin) {
    throw InputError(ErrorKind::MalformedValue,
                     path + ":" + std::to_string(lineno) + ": expected a number");
  }
  *pos += static_cast<std::size_t>(end - begin);
  return v;
}

FeatureMatrix load_csv(const std::string& path) {
  std::ifstream is = open_in(path, false);
  std::string line;
  if (!std::getline(is, line)) {
    throw InputError(ErrorKind::MalformedHeader, path + ": missing rows,cols header");
  }
  unsigned long rows = 0, cols = 0;
  char extra = 0;
  if (std::sscanf(line.c_str(), "%lu,%lu%c", &rows, &cols, &extra) != 2 ||
      rows == 0 || cols == 0) {
    throw InputError(ErrorKind::MalformedHeader,
                     path + ": header must be \"rows,cols\" with positive counts");
  }
  FeatureMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (unsigned long i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) {
      throw InputError(ErrorKind::MalformedValue,
                       path + ": expected " + std::to_string(rows) + " data rows, got " +
                           std::to_string(i));
    }
    std::size_t pos = 0;
    for (unsigned long j = 0; j < cols; ++j) {
      if (j > 0) {
        if (pos >= line.size() || line[pos] != ',') {
          throw InputError(ErrorKind::MalformedValue,
                           path + ":" + std::to_string(i + 2) + ": expected ',' before column " +
                               std::to_string(j + 1));
        }
        ++pos;
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_field(line, &pos, path, i + 2);
    }
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos != line.size()) {
      throw InputError(ErrorKind::MalformedValue,
                       path + ":" + std::to_string(i + 2) + ": trailing characters after " +
                           std::to_string(cols) + " columns");
    }
  }
  return m;
}

void save_csv(const std::string& path, const FeatureMatrix& m) {
  std::ofstream os = open_out(path, false);
  os << m.rows() << "," << m.cols() << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) os << ',';
      os << buf;
    }
    os << "\n";
  }
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

FeatureMatrix load_binary(const std::string& path) {
  std::ifstream is = open_in(path, true);
  bin::expect_magic(is, kFeatureMagic, path);
  const std::uint32_t version = bin::read_u32(is, "version");
  if (version != kFeatureVersion) {
    throw InputError(ErrorKind::BadFileFormat,
                     path + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = bin::read_u32(is, "rows");
  const std::uint32_t cols = bin::read_u32(is, "cols");
  if (rows == 0 || cols == 0) {
    throw InputError(ErrorKind::BadFileFormat, path + ": zero rows or cols");
  }
  FeatureMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(bin::read_f32(is, "feature payload"));
  bin::expect_eof(is, path);
  return m;
}

void save_binary(const std::string& path, const FeatureMatrix& m) {
  std::ofstream os = open_out(path, true);
  os.write(kFeatureMagic, 4);
  bin::write_u32(os, kFeatureVersion);
  bin::write_u32(os, static_cast<std::uint32_t>(m.rows()));
  bin::write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      bin::write_f32(os, static_cast<float>(m(i, j)));
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

// Gathers the given rows (and labels when present) into a dataset half.
MultiModalDataset gather(const MultiModalDataset& ds, const std::vector<int>& pair_rows,
                         const std::vector<int>& single_x, const std::vector<int>& single_y) {
  MultiModalDataset out;
  out.n_corr = pair_rows.size();
  out.x.resize(static_cast<Eigen::Index>(pair_rows.size() + single_x.size()), ds.x.cols());
  out.y.resize(static_cast<Eigen::Index>(pair_rows.size() + single_y.size()), ds.y.cols());
  Eigen::Index r = 0;
  for (int i : pair_rows) out.x.row(r++) = ds.x.row(i);
  for (int i : single_x) out.x.row(r++) = ds.x.row(i);
  r = 0;
  for (int i : pair_rows) out.y.row(r++) = ds.y.row(i);
  for (int i : single_y) out.y.row(r++) = ds.y.row(i);
  if (!ds.labels_x.empty()) {
    out.labels_x.reserve(pair_rows.size() + single_x.size());
    for (int i : pair_rows) out.labels_x.push_back(ds.labels_x[static_cast<std::size_t>(i)]);
    for (int i : single_x) out.labels_x.push_back(ds.labels_x[static_cast<std::size_t>(i)]);
  }
  if (!ds.labels_y.empty()) {
    out.labels_y.reserve(pair_rows.size() + single_y.size());
    for (int i : pair_rows) out.labels_y.push_back(ds.labels_y[static_cast<std::size_t>(i)]);
    for (int i : single_y) out.labels_y.push_back(ds.labels_y[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Shuffles [first, last), keeps the first llround(frac * count) for train,
// returns both halves sorted ascending.
void draw_split(int first, int last, double frac, rng::Engine& eng,
                std::vector<int>* train, std::vector<int>* test) {
  std::vector<int> idx(static_cast<std::size_t>(last - first));
  std::iota(idx.begin(), idx.end(), first);
  rng::shuffle(idx, eng);
  const std::size_t k = static_cast<std::size_t>(
      std::llround(frac * static_cast<double>(idx.size())));
  train->assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(k, idx.size())));
  test->assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(k, idx.size())), idx.end());
  std::sort(train->begin(), train->end());
  std::sort(test->begin(), test->end());
}

}  // namespace

void validate_features(const FeatureMatrix& m, const std::string& what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InputError(ErrorKind::BadArgument,
                     what + ": feature matrix must have at least one row and column");
  }
  if (!m.allFinite()) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (!std::isfinite(m(i, j))) {
          throw InputError(ErrorKind::NonFiniteValue,
                           what + ": non-finite value at row " + std::to_string(i) +
                               ", col " + std::to_string(j));
        }
  }
}

FeatureMatrix load_feature_matrix(const std::string& path, MatrixFormat format) {
  FeatureMatrix m = format == MatrixFormat::Csv ? load_csv(path) : load_binary(path);
  validate_features(m, path);
  return m;
}

void save_feature_matrix(const std::string& path, const FeatureMatrix& m,
                         MatrixFormat format) {
  validate_features(m, path);
  if (format == MatrixFormat::Csv) {
    save_csv(path, m);
  } else {
    save_binary(path, m);
  }
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream is = open_in(path, false);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* begin = line.c_str();
    char* end = nullptr;
    long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0') {
      throw InputError(ErrorKind::MalformedValue,
                       path + ":" + std::to_string(lineno) + ": expected one integer per line");
    }
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) {
    throw InputError(ErrorKind::MalformedValue, path + ": no labels found");
  }
  return labels;
}

void save_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream os = open_out(path, false);
  for (int v : labels) os << v << "\n";
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

std::pair<MultiModalDataset, MultiModalDataset> split_dataset(
    const MultiModalDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError(ErrorKind::BadArgument, "train_fraction must be in (0,1)");
  }
  validate_features(ds.x, "modality x");
  validate_features(ds.y, "modality y");
  const std::size_t min_n = static_cast<std::size_t>(std::min(ds.x.rows(), ds.y.rows()));
  if (ds.n_corr > min_n) {
    throw InputError(ErrorKind::BadArgument,
                     "n_corr exceeds the smaller modality's row count");
  }
  if (!ds.labels_x.empty() && ds.labels_x.size() != static_cast<std::size_t>(ds.x.rows())) {
    throw InputError(ErrorKind::DimensionMismatch, "labels_x length != x rows");
  }
  if (!ds.labels_y.empty() && ds.labels_y.size() != static_cast<std::size_t>(ds.y.rows())) {
    throw InputError(ErrorKind::DimensionMismatch, "labels_y length != y rows");
  }

  // Pairs move as units; the leftover singles of each modality split on
  // their own streams so modality sizes stay independent.
  rng::Engine eng_pairs(rng::mix(seed, 0));
  rng::Engine eng_x(rng::mix(seed, 1));
  rng::Engine eng_y(rng::mix(seed, 2));
  std::vector<int> pair_train, pair_test, x_train, x_test, y_train, y_test;
  draw_split(0, static_cast<int>(ds.n_corr), train_fraction, eng_pairs, &pair_train, &pair_test);
  draw_split(static_cast<int>(ds.n_corr), static_cast<int>(ds.x.rows()), train_fraction,
             eng_x, &x_train, &x_test);
  draw_split(static_cast<int>(ds.n_corr), static_cast<int>(ds.y.rows()), train_fraction,
             eng_y, &y_train, &y_test);

  MultiModalDataset train = gather(ds, pair_train, x_train, y_train);
  MultiModalDataset test = gather(ds, pair_test, x_test, y_test);
  if (train.x.rows() == 0 || train.y.rows() == 0 || test.x.rows() == 0 ||
      test.y.rows() == 0) {
    throw InputError(ErrorKind::EmptySplit,
                     "split leaves an empty modality (train " +
                         std::to_string(train.x.rows()) + "/" + std::to_string(train.y.rows()) +
                         ", test " + std::to_string(test.x.rows()) + "/" +
                         std::to_string(test.y.rows()) + ")");
  }
  return {std::move(train), std::move(test)};
}

MultiModalDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_clusters < 1 || spec.points_per_cluster < 1) {
    throw InputError(ErrorKind::BadArgument, "cluster counts must be positive");
  }
  if (spec.d_x < 1 || spec.d_y < 1) {
    throw InputError(ErrorKind::BadArgument, "feature dimensions must be positive");
  }
  if (spec.noise_std < 0.0 || !(spec.corr_ratio >= 0.0 && spec.corr_ratio <= 1.0)) {
    throw InputError(ErrorKind::BadArgument, "noise_std >= 0 and corr_ratio in [0,1] required");
  }
  const int n = spec.n_clusters * spec.points_per_cluster;
  const int latent = std::max(2, spec.n_clusters);
  const std::size_t n_corr = static_cast<std::size_t>(
      std::floor(spec.corr_ratio * static_cast<double>(n)));

  rng::Engine eng(spec.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
  Matrix map_x(spec.d_x, latent);
  for (Eigen::Index i = 0; i < map_x.rows(); ++i)
    for (Eigen::Index j = 0; j < map_x.cols(); ++j) map_x(i, j) = scale * rng::normal(eng);
  Matrix map_y(spec.d_y, latent);
  for (Eigen::Index i = 0; i < map_y.rows(); ++i)
    for (Eigen::Index j = 0; j < map_y.cols(); ++j) map_y(i, j) = scale * rng::normal(eng);
  Matrix centers(spec.n_clusters, latent);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(i, j) = 2.5 * rng::normal(eng);

  MultiModalDataset ds;
  ds.x.resize(n, spec.d_x);
  ds.y.resize(n, spec.d_y);
  ds.n_corr = n_corr;
  ds.labels_x.resize(static_cast<std::size_t>(n));
  ds.labels_y.resize(static_cast<std::size_t>(n));
  Vector px(latent), py(latent);
  for (int i = 0; i < n; ++i) {
    const int k = i % spec.n_clusters;
    ds.labels_x[static_cast<std::size_t>(i)] = k;
    ds.labels_y[static_cast<std::size_t>(i)] = k;
    for (int j = 0; j < latent; ++j) px(j) = centers(k, j) + 0.5 * rng::normal(eng);
    if (static_cast<std::size_t>(i) < n_corr) {
      py = px;
    } else {
      for (int j = 0; j < latent; ++j) py(j) = centers(k, j) + 0.5 * rng::normal(eng);
    }
    for (int j = 0; j < spec.d_x; ++j)
      ds.x(i, j) = map_x.row(j).dot(px) + spec.noise_std * rng::normal(eng);
    for (int j = 0; j < spec.d_y; ++j)
      ds.y(i, j) = map_y.row(j).dot(py) + spec.noise_std * rng::normal(eng);
  }
  validate_features(ds.x, "synthetic x");
  validate_features(ds.y, "synthetic y");
  return ds;
}

}  // namespace pccmh
