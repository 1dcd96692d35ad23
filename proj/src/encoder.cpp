#include "pccmh/encoder.hpp"

#include <bit>
#include <fstream>

#include "pccmh/binio.hpp"

namespace pccmh {

namespace {

constexpr char kCodesMagic[] = "PCMHCOD";
constexpr std::uint32_t kCodesVersion = 1;

}  // namespace

HashCodeSet pack_scores(const Matrix& scores) {
  HashCodeSet codes;
  codes.n = static_cast<std::uint32_t>(scores.rows());
  codes.c = static_cast<std::uint32_t>(scores.cols());
  codes.bits.assign(static_cast<std::size_t>(codes.n) * codes.bytes_per_code(), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    std::uint8_t* dst = codes.bits.data() + static_cast<std::size_t>(i) * codes.bytes_per_code();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (scores(i, j) >= 0.0) {
        dst[j >> 3] |= static_cast<std::uint8_t>(1u << (j & 7));
      }
    }
  }
  return codes;
}

Matrix unpack_codes(const HashCodeSet& codes) {
  Matrix out(codes.n, codes.c);
  for (std::uint32_t i = 0; i < codes.n; ++i)
    for (std::uint32_t j = 0; j < codes.c; ++j) out(i, j) = codes.bit(i, j) ? 1.0 : -1.0;
  return out;
}

HashCodeSet encode(const HashModel& model, const FeatureMatrix& data, Modality mod) {
  validate_features(data, "encode input");
  const AnchorSet& anchors = mod == Modality::X ? model.anchors_x : model.anchors_y;
  const double sigma = mod == Modality::X ? model.sigma_x : model.sigma_y;
  const Matrix& b = mod == Modality::X ? model.b_x : model.b_y;
  const Vector& thresholds = mod == Modality::X ? model.thresholds_x : model.thresholds_y;
  if (data.cols() != anchors.centers.cols()) {
    throw InputError(ErrorKind::DimensionMismatch,
                     "data has " + std::to_string(data.cols()) + " dims, modality expects " +
                         std::to_string(anchors.centers.cols()));
  }

  Matrix scores(data.rows(), model.c);
  std::vector<std::string> row_error(static_cast<std::size_t>(data.rows()));
  parallel_for(data.rows(), [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      try {
        const Vector z = kernel_row(data.row(i), anchors.centers, sigma,
                                    model.meta.s_nearest, i);
        scores.row(i) = (z.transpose() * b) - thresholds.transpose();
      } catch (const Error& e) {
        row_error[static_cast<std::size_t>(i)] = e.what();
      }
    }
  });
  for (const std::string& err : row_error) {
    if (!err.empty()) throw NumericError(ErrorKind::ZeroRowSimilarity, err);
  }
  return pack_scores(scores);
}

int hamming_distance(const HashCodeSet& a, std::size_t i, const HashCodeSet& b,
                     std::size_t j) {
  if (a.c != b.c) {
    throw InputError(ErrorKind::CodeLengthMismatch,
                     "code lengths differ: " + std::to_string(a.c) + " vs " +
                         std::to_string(b.c));
  }
  const std::uint8_t* pa = a.code(i);
  const std::uint8_t* pb = b.code(j);
  int dist = 0;
  for (std::size_t k = 0; k < a.bytes_per_code(); ++k) {
    dist += std::popcount(static_cast<unsigned>(pa[k] ^ pb[k]));
  }
  return dist;
}

void save_codes(const std::string& path, const HashCodeSet& codes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  os.write(kCodesMagic, 7);
  bin::write_u32(os, kCodesVersion);
  bin::write_u32(os, codes.n);
  bin::write_u32(os, codes.c);
  os.write(reinterpret_cast<const char*>(codes.bits.data()),
           static_cast<std::streamsize>(codes.bits.size()));
  if (!os) throw InputError(ErrorKind::IoFailure, "write failed: " + path);
}

HashCodeSet load_codes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(ErrorKind::IoFailure, "cannot open " + path + " for reading");
  bin::expect_magic(is, kCodesMagic, path);
  const std::uint32_t version = bin::read_u32(is, "version");
  if (version != kCodesVersion) {
    throw InputError(ErrorKind::BadFileFormat,
                     path + ": unsupported version " + std::to_string(version));
  }
  HashCodeSet codes;
  codes.n = bin::read_u32(is, "item count");
  codes.c = bin::read_u32(is, "code length");
  if (codes.c == 0) throw InputError(ErrorKind::BadFileFormat, path + ": zero code length");
  codes.bits.resize(static_cast<std::size_t>(codes.n) * codes.bytes_per_code());
  bin::read_exact(is, codes.bits.data(), codes.bits.size(), "code payload");
  bin::expect_eof(is, path);
  const std::uint32_t pad = static_cast<std::uint32_t>(codes.bytes_per_code()) * 8 - codes.c;
  if (pad > 0) {
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFFu << (8 - pad));
    for (std::uint32_t i = 0; i < codes.n; ++i) {
      if (codes.code(i)[codes.bytes_per_code() - 1] & mask) {
        throw InputError(ErrorKind::BadFileFormat,
                         path + ": nonzero padding bits in code " + std::to_string(i));
      }
    }
  }
  return codes;
}

}  // namespace pccmh
