#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "pccmh/anchor_graph.hpp"
#include "test_support.hpp"

using namespace pccmh;

namespace {

// The worked 2x2 example used across the affinity and Laplacian checks.
AnchorGraph hand_graph() {
  AnchorGraph g;
  g.z.resize(2, 2);
  g.z << 1.0, 0.0, 0.5, 0.5;
  g.col_sums.resize(2);
  g.col_sums << 1.5, 0.5;
  g.sigma = 1.0;
  return g;
}

}  // namespace

TEST_CASE("kernel row matches hand-evaluated exponentials") {
  Matrix centers(2, 2);
  SUBCASE("equidistant anchors split evenly") {
    centers << 0, 1, 0, -1;
    const Vector row = kernel_row(Eigen::RowVector2d(0, 0), centers, 1.0, 0, 0);
    CHECK(row(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(row(1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("unit distance gives exp(-1) against the raw anchor") {
    centers << 0, 0, 1, 0;
    const Vector row = kernel_row(Eigen::RowVector2d(1, 0), centers, 1.0, 0, 0);
    // raw kernel (e^-1, 1), normalized; the ratio restores the raw value
    const double kExpMinus1 = 0.36787944117144233;
    CHECK(row(0) / row(1) == doctest::Approx(kExpMinus1).epsilon(1e-14));
    CHECK(row(0) + row(1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("distance 5 at sigma 1 gives exp(-25)") {
    centers << 0, 0, 3, 4;
    const Vector row = kernel_row(Eigen::RowVector2d(0, 0), centers, 1.0, 0, 0);
    const double kExpMinus25 = 1.3887943864964021e-11;
    CHECK(row(1) / row(0) == doctest::Approx(kExpMinus25).epsilon(1e-12));
    CHECK(row(0) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("kernel underflow raises ZeroRowSimilarity with the row index") {
  Matrix centers(1, 1);
  centers << 1000.0;
  try {
    kernel_row(Eigen::RowVectorXd::Zero(1), centers, 1e-3, 0, 7);
    FAIL("expected throw");
  } catch (const NumericError& e) {
    CHECK(e.kind() == ErrorKind::ZeroRowSimilarity);
    CHECK(std::string(e.what()).find("row 7") != std::string::npos);
  }
}

TEST_CASE("compute_z builds row-normalized graphs with consistent col_sums") {
  rng::Engine eng(3);
  const Matrix data = testsup::random_matrix(40, 3, eng);
  AnchorSet anchors;
  anchors.centers = testsup::random_matrix(5, 3, eng);
  const double sigma = estimate_sigma(data, anchors);
  const AnchorGraph g = compute_z(data, anchors, sigma);

  CHECK(g.n() == 40);
  CHECK(g.m() == 5);
  CHECK(g.z.minCoeff() >= 0.0);
  for (Eigen::Index i = 0; i < g.n(); ++i) {
    CHECK(g.z.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Vector sums = g.z.colwise().sum().transpose();
  CHECK((sums - g.col_sums).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.col_sums.minCoeff() > 0.0);
}

TEST_CASE("compute_z validates sigma, dims and s_nearest") {
  Matrix data = Matrix::Ones(3, 2);
  AnchorSet anchors;
  anchors.centers = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(compute_z(data, anchors, 0.0), InputError);
  CHECK_THROWS_AS(compute_z(data, anchors, -1.0), InputError);
  CHECK_THROWS_AS(compute_z(data, anchors, 1.0, 3), InputError);
  CHECK_THROWS_AS(compute_z(data, anchors, 1.0, -1), InputError);
  AnchorSet wrong;
  wrong.centers = Matrix::Ones(2, 3);
  CHECK_THROWS_AS(compute_z(data, wrong, 1.0), InputError);
}

TEST_CASE("s_nearest truncation keeps the nearest anchors only") {
  Matrix centers(3, 1);
  centers << 0.0, 1.0, 10.0;
  const Vector row = kernel_row(Eigen::RowVectorXd::Zero(1), centers, 4.0, 2, 0);
  CHECK(row(2) == 0.0);
  CHECK(row(0) > row(1));
  CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-15));
  // against the same row without truncation, renormalized over the kept two
  const Vector dense = kernel_row(Eigen::RowVectorXd::Zero(1), centers, 4.0, 0, 0);
  const double renorm = dense(0) + dense(1);
  CHECK(row(0) == doctest::Approx(dense(0) / renorm).epsilon(1e-14));
}

TEST_CASE("estimate_sigma equals the brute-force mean nearest squared distance") {
  rng::Engine eng(23);
  const Matrix data = testsup::random_matrix(50, 3, eng);
  AnchorSet anchors;
  anchors.centers = testsup::random_matrix(6, 3, eng);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < anchors.centers.rows(); ++k) {
      best = std::min(best, (data.row(i) - anchors.centers.row(k)).squaredNorm());
    }
    expected += best;
  }
  expected /= static_cast<double>(data.rows());
  CHECK(estimate_sigma(data, anchors) == doctest::Approx(expected).epsilon(1e-13));

  AnchorSet self;
  self.centers = data;
  CHECK(estimate_sigma(data, self) == 1e-12);

  Matrix two(2, 1);
  two << 0.0, 10.0;
  AnchorSet offset;
  offset.centers.resize(2, 1);
  offset.centers << 1.0, 9.0;
  CHECK(estimate_sigma(two, offset) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("approx_affinity reproduces the worked 2x2 case") {
  const Matrix w = approx_affinity(hand_graph());
  Matrix expected(2, 2);
  expected << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  CHECK((w - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("approx_affinity of the identity graph is the identity") {
  AnchorGraph g;
  g.z = Matrix::Identity(4, 4);
  g.col_sums = Vector::Ones(4);
  g.sigma = 1.0;
  const Matrix w = approx_affinity(g);
  CHECK((w - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);
  const Matrix l = reduced_laplacian(g).matrix;
  CHECK(l.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("approx_affinity rows sum to one and the size guard holds") {
  rng::Engine eng(41);
  const AnchorGraph g = testsup::random_graph(60, 7, 3, eng);
  const Matrix w = approx_affinity(g);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(w.minCoeff() >= 0.0);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    CHECK(w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }

  AnchorGraph big;
  big.z = Matrix::Ones(2001, 1);
  big.col_sums = Vector::Ones(1) * 2001.0;
  try {
    approx_affinity(big);
    FAIL("expected throw");
  } catch (const InputError& e) {
    CHECK(e.kind() == ErrorKind::SizeGuardExceeded);
  }
}

TEST_CASE("reduced_laplacian reproduces the worked 2x2 case to 1e-12") {
  const Matrix l = reduced_laplacian(hand_graph()).matrix;
  Matrix expected(2, 2);
  expected << 1.0 / 12.0, -1.0 / 12.0, -1.0 / 12.0, 1.0 / 12.0;
  CHECK((l - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reduced_laplacian equals the dense-graph construction on random graphs") {
  rng::Engine eng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng::uniform_index(eng, 80));
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng::uniform_index(eng, 6));
    const AnchorGraph g = testsup::random_graph(n, m, 3, eng);

    const Matrix w = approx_affinity(g);
    const Matrix d = w.rowwise().sum().asDiagonal();
    const Matrix dense_l = g.z.transpose() * (d - w) * g.z;
    const Matrix l = reduced_laplacian(g).matrix;
    CHECK((l - dense_l).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("reduced_laplacian is PSD and annihilates the constant vector") {
  rng::Engine eng(53);
  const AnchorGraph g = testsup::random_graph(100, 8, 4, eng);
  const Matrix l = reduced_laplacian(g).matrix;

  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((l * Vector::Ones(8)).cwiseAbs().maxCoeff() <= 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix> es(l);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  for (int probe = 0; probe < 100; ++probe) {
    Vector x(8);
    for (Eigen::Index i = 0; i < 8; ++i) x(i) = rng::normal(eng);
    CHECK(x.dot(l * x) >= -1e-8);
  }
}

TEST_CASE("quadratic form matches the pairwise smoothness sum") {
  rng::Engine eng(59);
  const AnchorGraph g = testsup::random_graph(50, 5, 2, eng);
  const Matrix w = approx_affinity(g);
  const Matrix l = reduced_laplacian(g).matrix;
  for (int trial = 0; trial < 5; ++trial) {
    Vector b(5);
    for (Eigen::Index i = 0; i < 5; ++i) b(i) = rng::normal(eng);
    const Vector f = g.z * b;
    double pairwise = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
      for (Eigen::Index j = 0; j < f.size(); ++j)
        pairwise += w(i, j) * (f(i) - f(j)) * (f(i) - f(j));
    CHECK(b.dot(l * b) == doctest::Approx(0.5 * pairwise).epsilon(1e-7));
  }
}

TEST_CASE("kernel depends only on distances (rotation invariance)") {
  rng::Engine eng(61);
  const Matrix data = testsup::random_matrix(30, 2, eng);
  AnchorSet anchors;
  anchors.centers = testsup::random_matrix(4, 2, eng);
  const double theta = 0.7;
  Matrix rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  AnchorSet rotated;
  rotated.centers = anchors.centers * rot.transpose();

  const AnchorGraph g1 = compute_z(data, anchors, 0.8);
  const AnchorGraph g2 = compute_z((data * rot.transpose()).eval(), rotated, 0.8);
  CHECK((g1.z - g2.z).cwiseAbs().maxCoeff() <= 1e-9);
}
