#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pccmh/trainer.hpp"

namespace pccmh {

enum class Modality { X, Y };

// Bit-packed codes over {-1,+1}^c with +1 -> 1, -1 -> 0. Code i occupies
// bytes [i*bpc, (i+1)*bpc), bpc = ceil(c/8); bit j of a code sits at byte
// j/8, bit j%8 (LSB first). Padding bits are zero.
struct HashCodeSet {
  std::uint32_t n = 0;
  std::uint32_t c = 0;
  std::vector<std::uint8_t> bits;  // n * bytes_per_code()

  std::size_t bytes_per_code() const { return (static_cast<std::size_t>(c) + 7) / 8; }
  const std::uint8_t* code(std::size_t i) const { return bits.data() + i * bytes_per_code(); }
  bool bit(std::size_t i, std::uint32_t j) const {
    return (code(i)[j >> 3] >> (j & 7)) & 1;
  }
};

// Packs sgn(scores) row-wise: bit = 1 iff score >= 0 (sgn(0) = +1).
HashCodeSet pack_scores(const Matrix& scores);

// Signed +-1 matrix view of a code set (test convenience).
Matrix unpack_codes(const HashCodeSet& codes);

// Out-of-sample hashing: kernel row against the modality's anchors (same
// sigma, truncation and normalization as training), projection, threshold,
// sign.
HashCodeSet encode(const HashModel& model, const FeatureMatrix& data, Modality mod);

// Number of differing bits; requires equal code length.
int hamming_distance(const HashCodeSet& a, std::size_t i, const HashCodeSet& b,
                     std::size_t j);

// Codes file: magic "PCMHCOD", u32 version=1, u32 n, u32 c, packed payload.
void save_codes(const std::string& path, const HashCodeSet& codes);
HashCodeSet load_codes(const std::string& path);

}  // namespace pccmh
