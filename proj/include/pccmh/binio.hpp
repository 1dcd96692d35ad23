#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "pccmh/common.hpp"

// Little-endian primitives shared by the binary file formats. All multi-byte
// payloads in the formats (PCMH, PCMHMDL, PCMHCOD, PCMHCCA) go through these.
namespace pccmh::bin {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u64(os, u);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

inline void read_exact(std::istream& is, void* dst, std::size_t n,
                       const std::string& what) {
  is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw InputError(ErrorKind::BadFileFormat, "truncated file while reading " + what);
  }
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  read_exact(is, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is, const std::string& what) {
  unsigned char b[8];
  read_exact(is, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
  std::uint64_t u = read_u64(is, what);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline float read_f32(std::istream& is, const std::string& what) {
  std::uint32_t u = read_u32(is, what);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

// Row-major f64 payload.
inline void write_matrix_f64(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(os, m(i, j));
}

inline Matrix read_matrix_f64(std::istream& is, Eigen::Index rows,
                              Eigen::Index cols, const std::string& what) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_f64(is, what);
  return m;
}

inline void write_vector_f64(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
}

inline Vector read_vector_f64(std::istream& is, Eigen::Index n,
                              const std::string& what) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = read_f64(is, what);
  return v;
}

inline void expect_magic(std::istream& is, const char* magic,
                         const std::string& path) {
  std::size_t len = std::strlen(magic);
  char buf[16] = {0};
  is.read(buf, static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(is.gcount()) != len ||
      std::memcmp(buf, magic, len) != 0) {
    throw InputError(ErrorKind::BadFileFormat,
                     path + ": bad magic, expected " + magic);
  }
}

inline void expect_eof(std::istream& is, const std::string& path) {
  is.peek();
  if (!is.eof()) {
    throw InputError(ErrorKind::BadFileFormat, path + ": trailing bytes after payload");
  }
}

}  // namespace pccmh::bin
