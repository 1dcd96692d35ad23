#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <functional>

#include <Eigen/Dense>

namespace pccmh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Machine-checkable failure categories. Messages carry the human detail
// (offending row, path, ...); the kind is what tests and the CLI dispatch on.
enum class ErrorKind {
  BadArgument,
  MalformedHeader,
  MalformedValue,
  NonFiniteValue,
  DimensionMismatch,
  EmptySplit,
  AnchorCountExceedsData,
  ZeroRowSimilarity,
  OrphanAnchor,
  SizeGuardExceeded,
  NonSymmetric,
  InsufficientEigenpairs,
  SingularCovariance,
  CodeLengthMismatch,
  EmptyDatabase,
  MissingLabels,
  IoFailure,
  BadFileFormat,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// User/configuration/file problems. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown inside an otherwise valid run. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Worker cap for the row-parallel loops (compute_z, encode). The loops are
// pure maps over rows, so results are identical for any cap.
void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) over disjoint chunks of [0, n). With max_threads() == 1
// this is a plain call on the full range.
void parallel_for(std::ptrdiff_t n,
                  const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& fn);

}  // namespace pccmh
