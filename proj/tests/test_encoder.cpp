#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <numeric>

#include "pccmh/encoder.hpp"
#include "test_support.hpp"

using namespace pccmh;

namespace {

HashModel one_anchor_model() {
  HashModel model;
  model.anchors_x.centers = Matrix::Zero(1, 2);
  model.anchors_y.centers = Matrix::Zero(1, 2);
  model.sigma_x = 1.0;
  model.sigma_y = 1.0;
  model.b_x = Matrix::Ones(1, 1);
  model.b_y = Matrix::Ones(1, 1);
  model.thresholds_x = Vector::Constant(1, 0.5);
  model.thresholds_y = Vector::Constant(1, 0.5);
  model.c = 1;
  return model;
}

HashCodeSet random_codes(std::uint32_t n, std::uint32_t c, rng::Engine& eng) {
  Matrix scores(n, c);
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) scores(i, j) = rng::normal(eng);
  return pack_scores(scores);
}

}  // namespace

TEST_CASE("pack_scores maps sign to bits with sgn(0) = +1") {
  Matrix scores(2, 3);
  scores << 0.5, -0.1, 0.0, -2.0, 3.0, -0.0;
  const HashCodeSet codes = pack_scores(scores);
  CHECK(codes.n == 2);
  CHECK(codes.c == 3);
  CHECK(codes.bit(0, 0));
  CHECK_FALSE(codes.bit(0, 1));
  CHECK(codes.bit(0, 2));  // exactly at threshold -> +1
  CHECK_FALSE(codes.bit(1, 0));
  CHECK(codes.bit(1, 1));
  CHECK(codes.bit(1, 2));  // negative zero compares >= 0
}

TEST_CASE("pack and unpack round trip across byte-boundary code lengths") {
  rng::Engine eng(5);
  for (std::uint32_t c : {1u, 7u, 8u, 9u, 16u, 24u, 32u, 33u}) {
    Matrix scores(6, static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < scores.rows(); ++i)
      for (Eigen::Index j = 0; j < scores.cols(); ++j)
        scores(i, j) = rng::uniform01(eng) < 0.5 ? -1.0 : 1.0;
    const HashCodeSet codes = pack_scores(scores);
    CHECK(codes.bits.size() == 6 * ((c + 7) / 8));
    const Matrix back = unpack_codes(codes);
    CHECK((back - scores).cwiseAbs().maxCoeff() == 0.0);

    // Padding bits beyond c must stay zero.
    for (std::uint32_t i = 0; i < codes.n; ++i) {
      for (std::uint32_t j = c; j < 8 * codes.bytes_per_code(); ++j) {
        const bool padding_bit = ((codes.code(i)[j >> 3] >> (j & 7)) & 1) != 0;
        CHECK_FALSE(padding_bit);
      }
    }
  }
}

TEST_CASE("single-anchor pipeline traces to an all-ones projection") {
  // With one anchor, every normalized kernel row is [1]; projection 1 against
  // threshold 0.5 leaves bit +1 regardless of the input point.
  const HashModel model = one_anchor_model();
  rng::Engine eng(9);
  const Matrix data = testsup::random_matrix(10, 2, eng);
  const HashCodeSet codes = encode(model, data, Modality::X);
  for (std::uint32_t i = 0; i < codes.n; ++i) CHECK(codes.bit(i, 0));
}

TEST_CASE("encoding twice is identical and rows encode independently") {
  rng::Engine eng(13);
  HashModel model = one_anchor_model();
  model.anchors_x.centers = testsup::random_matrix(4, 2, eng);
  model.b_x = testsup::random_matrix(4, 3, eng);
  model.thresholds_x = Vector::Zero(3);
  model.c = 3;

  const Matrix data = testsup::random_matrix(12, 2, eng);
  const HashCodeSet a = encode(model, data, Modality::X);
  const HashCodeSet b = encode(model, data, Modality::X);
  CHECK(a.bits == b.bits);

  // Permuting input rows permutes codes identically.
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  rng::Engine peng(17);
  rng::shuffle(perm, peng);
  Matrix shuffled(12, 2);
  for (int i = 0; i < 12; ++i) shuffled.row(i) = data.row(perm[static_cast<std::size_t>(i)]);
  const HashCodeSet c = encode(model, shuffled, Modality::X);
  for (int i = 0; i < 12; ++i) {
    for (std::uint32_t j = 0; j < c.c; ++j) {
      CHECK(c.bit(static_cast<std::size_t>(i), j) ==
            a.bit(static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]), j));
    }
  }
}

TEST_CASE("encode validates dimensions per modality") {
  const HashModel model = one_anchor_model();
  const Matrix bad = Matrix::Ones(3, 5);
  try {
    encode(model, bad, Modality::X);
    FAIL("expected throw");
  } catch (const InputError& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("hamming distance basics and length mismatch") {
  Matrix scores(2, 3);
  scores << 1, -1, 1, 1, 1, -1;
  const HashCodeSet codes = pack_scores(scores);
  CHECK(hamming_distance(codes, 0, codes, 0) == 0);
  CHECK(hamming_distance(codes, 0, codes, 1) == 2);
  CHECK(hamming_distance(codes, 1, codes, 0) == 2);

  rng::Engine eng(21);
  const HashCodeSet other = random_codes(2, 4, eng);
  try {
    hamming_distance(codes, 0, other, 0);
    FAIL("expected throw");
  } catch (const InputError& e) {
    CHECK(e.kind() == ErrorKind::CodeLengthMismatch);
  }
}

TEST_CASE("hamming distance matches a per-bit loop oracle on random 64-bit codes") {
  rng::Engine eng(23);
  const HashCodeSet codes = random_codes(40, 64, eng);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      int expected = 0;
      for (std::uint32_t b = 0; b < 64; ++b) {
        if (codes.bit(i, b) != codes.bit(j, b)) ++expected;
      }
      CHECK(hamming_distance(codes, i, codes, j) == expected);
    }
  }
}

TEST_CASE("hamming distance is a metric on random codes") {
  rng::Engine eng(27);
  const HashCodeSet codes = random_codes(15, 19, eng);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(hamming_distance(codes, i, codes, i) == 0);
    for (std::size_t j = 0; j < 15; ++j) {
      const int dij = hamming_distance(codes, i, codes, j);
      CHECK(dij == hamming_distance(codes, j, codes, i));
      CHECK(dij <= 19);
      for (std::size_t k = 0; k < 15; ++k) {
        CHECK(dij <= hamming_distance(codes, i, codes, k) +
                         hamming_distance(codes, k, codes, j));
      }
    }
  }
}

TEST_CASE("codes file round trip and validation") {
  testsup::TempDir dir("codes_rt");
  rng::Engine eng(31);
  const HashCodeSet codes = random_codes(9, 13, eng);
  save_codes(dir.file("c.pccmhc"), codes);
  const HashCodeSet back = load_codes(dir.file("c.pccmhc"));
  CHECK(back.n == codes.n);
  CHECK(back.c == codes.c);
  CHECK(back.bits == codes.bits);

  // Corrupt a padding bit; the loader must reject it.
  std::string bytes;
  {
    std::ifstream is(dir.file("c.pccmhc"), std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  }
  bytes[bytes.size() - 1] = static_cast<char>(static_cast<unsigned char>(bytes.back()) | 0x80u);
  std::ofstream(dir.file("pad.pccmhc"), std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  try {
    load_codes(dir.file("pad.pccmhc"));
    FAIL("expected throw");
  } catch (const InputError& e) {
    CHECK(e.kind() == ErrorKind::BadFileFormat);
  }
}
