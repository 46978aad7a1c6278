#include <doctest.h>

#include <algorithm>

#include "dsf/matrixnum.hpp"

using namespace dsf;

namespace {

// Sorted comparison of eigenvalue multisets.
double eig_set_distance(std::vector<Complex> a, std::vector<Complex> b) {
  auto key = [](Complex x, Complex y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  };
  std::sort(a.begin(), a.end(), key);
  std::sort(b.begin(), b.end(), key);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("schur_ordered puts selected eigenvalues first on a diagonal input") {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = 2.0;
  SchurForm f = schur_ordered(A, stable_predicate(Domain::Continuous));
  CHECK(f.eigs[0].real() == doctest::Approx(-1.0));
  CHECK(f.eigs[1].real() == doctest::Approx(2.0));

  Mat B = Mat::Zero(2, 2);
  B(0, 0) = 2.0;
  B(1, 1) = -1.0;
  f = schur_ordered(B, stable_predicate(Domain::Continuous));
  CHECK(f.eigs[0].real() == doctest::Approx(-1.0));
  CHECK(f.eigs[1].real() == doctest::Approx(2.0));
  CHECK((f.Q * f.T * f.Q.transpose() - B).norm() < 1e-12);
}

TEST_CASE("schur_ordered keeps conjugate pairs together and rejects splitting one") {
  Mat A(2, 2);
  A << 0, 1, -1, 0;  // eigenvalues +-i
  SchurForm f = schur_ordered(A, stable_predicate(Domain::Continuous));
  CHECK(f.eigs.size() == 2);
  CHECK(std::abs(f.eigs[0] - Complex(0, 1)) < 1e-12);
  CHECK(std::abs(f.eigs[1] - Complex(0, -1)) < 1e-12);

  // A predicate that keeps only the +i half of the pair must be rejected.
  CHECK_THROWS_AS(schur_ordered(A, [](Complex z) { return z.imag() > 0; }), ValidationError);
}

TEST_CASE("schur_ordered leading block carries exactly the stable spectrum") {
  // Known spectrum, orthogonal similarity. Oracle: full eigenvalue solver.
  Rng rng(7);
  std::vector<Complex> stable = {{-1.5, 0.0}, {-0.4, 0.9}, {-0.4, -0.9}};
  std::vector<Complex> unstable = {{0.7, 0.0}, {1.2, 2.0}, {1.2, -2.0}};
  Mat L = Mat::Zero(6, 6);
  L(0, 0) = -1.5;
  L.block<2, 2>(1, 1) << -0.4, 0.9, -0.9, -0.4;
  L(3, 3) = 0.7;
  L.block<2, 2>(4, 4) << 1.2, 2.0, -2.0, 1.2;
  Mat S = rng.orthogonal(6);
  Mat A = S * L * S.transpose();

  SchurForm f = schur_ordered(A, stable_predicate(Domain::Continuous));
  std::vector<Complex> leading = eigenvalues(f.T.topLeftCorner(3, 3));
  CHECK(eig_set_distance(leading, stable) < 1e-10);
  std::vector<Complex> trailing = eigenvalues(f.T.bottomRightCorner(3, 3));
  CHECK(eig_set_distance(trailing, unstable) < 1e-10);
}

TEST_CASE("schur_ordered invariants: reconstruction and spectrum preservation") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Index n = 2 + rng.uniform_int(1, 6);
    Mat A = rng.gaussian_mat(n, n);
    SchurForm f = schur_ordered(A, stable_predicate(Domain::Continuous));
    CHECK((f.Q.transpose() * A * f.Q - f.T).norm() <= 1e-10 * std::max(1.0, A.norm()));
    CHECK((f.Q * f.Q.transpose() - Mat::Identity(n, n)).norm() < 1e-12);
    CHECK(eig_set_distance(f.eigs, eigenvalues(A)) < 1e-8 * std::max(1.0, A.norm()));
    // Selected eigenvalues really lead.
    bool seen_unstable = false;
    for (const auto& b : schur_blocks(f.T)) {
      bool stable = is_stable(b.eig, Domain::Continuous);
      if (!stable) seen_unstable = true;
      if (seen_unstable) CHECK(!stable);
    }
  }
}

TEST_CASE("numerical_rank on simple inputs") {
  CHECK(numerical_rank(Mat(Mat::Identity(3, 3))) == 3);
  Mat ones(2, 2);
  ones << 1, 1, 1, 1;
  CHECK(numerical_rank(ones) == 1);
  CHECK(numerical_rank(Mat(Mat::Zero(4, 2))) == 0);
}

TEST_CASE("numerical_rank of a known-rank product") {
  Rng rng(3);
  Mat left = rng.gaussian_mat(5, 2);
  Mat right = rng.gaussian_mat(2, 3);
  CHECK(numerical_rank(Mat(left * right)) == 2);
}

TEST_CASE("numerical_rank is invariant under orthogonal multiplication") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Index rows = 2 + rng.uniform_int(0, 4);
    Index cols = 2 + rng.uniform_int(0, 4);
    Index r = rng.uniform_int(0, static_cast<int>(std::min(rows, cols)));
    Mat A = rng.gaussian_mat(rows, r) * rng.gaussian_mat(r, cols);
    Mat Ql = rng.orthogonal(rows);
    Mat Qr = rng.orthogonal(cols);
    CHECK(numerical_rank(A) == r);
    CHECK(numerical_rank(Mat(Ql * A * Qr)) == numerical_rank(A));
  }
}

TEST_CASE("solve_sylvester scalar and identity cases") {
  Mat a = Mat::Constant(1, 1, 2.0);
  Mat b = Mat::Constant(1, 1, 1.0);
  Mat c = Mat::Constant(1, 1, 3.0);
  CHECK(solve_sylvester(a, b, c)(0, 0) == doctest::Approx(3.0));

  Rng rng(9);
  Mat c0 = rng.gaussian_mat(3, 4);
  Mat x = solve_sylvester(Mat::Zero(3, 3), -Mat::Identity(4, 4), c0);
  CHECK((x - c0).norm() < 1e-12);
}

TEST_CASE("solve_sylvester residual bound on random instances") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    Mat A = rng.gaussian_mat(4, 4);
    Mat B = rng.gaussian_mat(3, 3) + 8.0 * Mat::Identity(3, 3);  // disjoint spectra
    Mat C = rng.gaussian_mat(4, 3);
    Mat X = solve_sylvester(A, B, C);
    double resid = (A * X - X * B - C).norm();
    CHECK(resid <= 1e-10 * (A.norm() + B.norm()) * X.norm() + 1e-12);
  }
}

TEST_CASE("solve_sylvester rejects a shared eigenvalue") {
  Mat A = Mat::Identity(2, 2);
  Mat B = Mat::Identity(3, 3);
  Mat C = Mat::Ones(2, 3);
  CHECK_THROWS_AS(solve_sylvester(A, B, C), NumericalError);
}

TEST_CASE("schur_reorder_blocks honors an explicit subset with repeated eigenvalues") {
  // diag(-1, -1, 3): bringing the eigenvalue 3 first must work even though
  // two blocks share the eigenvalue -1.
  Mat A = Mat::Zero(3, 3);
  A(0, 0) = -1;
  A(1, 1) = -1;
  A(2, 2) = 3;
  SchurForm base = schur_decompose(A);
  auto blocks = schur_blocks(base.T);
  int three = -1;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (std::abs(blocks[i].eig - Complex(3, 0)) < 1e-12) three = static_cast<int>(i);
  REQUIRE(three >= 0);
  SchurForm f = schur_reorder_blocks(base, {three});
  CHECK(f.eigs[0].real() == doctest::Approx(3.0));
  CHECK((f.Q * f.T * f.Q.transpose() - A).norm() < 1e-12);
}
