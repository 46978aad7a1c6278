#include <doctest.h>

#include <algorithm>

#include "test_helpers.hpp"

using namespace dsf;
using dsf::testing::random_partitioned;
using dsf::testing::random_stable_pair_base;

TEST_CASE("viable_pair with K = 0 reproduces the canonical W and V") {
  Rng rng(31);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  ViablePair vp = viable_pair(base, Mat::Zero(3, 2));

  // Independent expressions W = A11 + A12 (lI - A22)^{-1} A21 and
  // V = B1 + A12 (lI - A22)^{-1} B2.
  StateSpace hidden{base.A22, base.A21, base.A12, base.A11, base.domain};
  RationalMatrix w_ref = RationalMatrix::from_state_space(hidden);
  StateSpace hidden_v{base.A22, base.B2, base.A12, base.B1, base.domain};
  RationalMatrix v_ref = RationalMatrix::from_state_space(hidden_v);
  for (int k = 0; k < 10; ++k) {
    Complex lam = rng.complex_in_disk(5.0);
    try {
      CHECK((vp.W.eval(lam) - w_ref.eval(lam)).norm() < 1e-11);
      CHECK((vp.V.eval(lam) - v_ref.eval(lam)).norm() < 1e-11);
    } catch (const PoleError&) {
    }
  }
}

TEST_CASE("viable_pair with no hidden states gives constant W = A11, V = B1") {
  Rng rng(33);
  PartitionedRealization base = random_partitioned(rng, 3, 2, 3);
  REQUIRE(base.hidden() == 0);
  ViablePair vp = viable_pair(base, Mat(0, 3));
  Complex lam(0.7, 1.1);
  CHECK((vp.W.eval(lam) - base.A11.cast<Complex>()).norm() < 1e-14);
  CHECK((vp.V.eval(lam) - base.B1.cast<Complex>()).norm() < 1e-14);
}

TEST_CASE("viable_pair satisfies L = (lambda I - W)^{-1} V for random K") {
  Rng rng(35);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  for (int trial = 0; trial < 5; ++trial) {
    Mat K = rng.gaussian_mat(3, 2);
    ViablePair vp = viable_pair(base, K);
    RationalMatrix lhs = (RationalMatrix::lambda_identity(2) - vp.W).inverse() * vp.V;
    CHECK(max_relative_error(lhs, vp.plant(), rng, 20) < 1e-8);
  }
}

TEST_CASE("viable_pair rejects a K of the wrong shape") {
  Rng rng(37);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  CHECK_THROWS_AS(viable_pair(base, Mat::Zero(2, 3)), ValidationError);
}

TEST_CASE("dsf_from_viable with diagonal W gives Q = 0 and P = L") {
  Rng rng(39);
  // A12 = 0 makes W the constant A11; choose it diagonal.
  PartitionedRealization base;
  base.A11 = Mat::Zero(2, 2);
  base.A11(0, 0) = -1.0;
  base.A11(1, 1) = -2.0;
  base.A12 = Mat::Zero(2, 2);
  base.A21 = rng.gaussian_mat(2, 2);
  base.A22 = rng.stable_matrix(2, Domain::Continuous);
  base.B1 = rng.gaussian_mat(2, 2);
  base.B2 = rng.gaussian_mat(2, 2);
  ViablePair vp = viable_pair(base, Mat::Zero(2, 2));
  DSFPair dsf = dsf_from_viable(vp);
  RationalMatrix L = vp.plant();
  for (int k = 0; k < 10; ++k) {
    Complex lam = rng.complex_in_disk(4.0);
    try {
      CHECK(dsf.Q.eval(lam).norm() < 1e-12);
      CHECK((dsf.P.eval(lam) - L.eval(lam)).norm() < 1e-9 * std::max(1.0, L.eval(lam).norm()));
    } catch (const PoleError&) {
    }
  }
}

TEST_CASE("dsf_from_viable identity (I - Q)^{-1} P = L and zero diagonal") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    PartitionedRealization base = random_partitioned(rng, 4, 2, 2);
    ViablePair vp = viable_pair(base, rng.gaussian_mat(2, 2));
    DSFPair dsf = dsf_from_viable(vp);
    RationalMatrix lhs =
        (RationalMatrix::constant(Mat::Identity(2, 2)) - dsf.Q).inverse() * dsf.P;
    CHECK(max_relative_error(lhs, vp.plant(), rng, 20) < 1e-8);

    // zero diagonal, scaled against ||W||
    for (int k = 0; k < 20; ++k) {
      Complex lam = rng.complex_in_disk(5.0);
      try {
        CMat q = dsf.Q.eval(lam);
        double wnorm = vp.W.eval(lam).norm();
        for (Index i = 0; i < q.rows(); ++i) CHECK(std::abs(q(i, i)) < 1e-10 * (1.0 + wnorm));
      } catch (const PoleError&) {
      }
    }
  }
}

TEST_CASE("place_pair_poles direct assignment when A12 = I") {
  Rng rng(43);
  PartitionedRealization base;
  const Index p = 3;
  base.A11 = rng.gaussian_mat(p, p);
  base.A12 = Mat::Identity(p, p);
  base.A21 = rng.gaussian_mat(p, p);
  base.A22 = rng.gaussian_mat(p, p);
  base.B1 = rng.gaussian_mat(p, 1);
  base.B2 = rng.gaussian_mat(p, 1);
  std::vector<Complex> targets = {{-1, 0}, {-2, 0}, {-3, 0}};
  Mat K = place_pair_poles(base, targets, rng);
  auto eigs = eigenvalues(base.A22 + K * base.A12);
  std::sort(eigs.begin(), eigs.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  CHECK(std::abs(eigs[0] - Complex(-3, 0)) < 1e-6);
  CHECK(std::abs(eigs[1] - Complex(-2, 0)) < 1e-6);
  CHECK(std::abs(eigs[2] - Complex(-1, 0)) < 1e-6);
}

TEST_CASE("place_pair_poles scalar chain") {
  PartitionedRealization base;
  base.A11 = Mat::Zero(1, 1);
  base.A12 = Mat::Ones(1, 1);
  base.A21 = Mat::Zero(1, 1);
  base.A22 = Mat::Zero(1, 1);
  base.B1 = Mat::Ones(1, 1);
  base.B2 = Mat::Ones(1, 1);
  Rng rng(45);
  Mat K = place_pair_poles(base, {{-2.0, 0.0}}, rng);
  CHECK(K(0, 0) == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("place_pair_poles random observable pair with a complex pair target") {
  Rng rng(47);
  PartitionedRealization base = random_partitioned(rng, 6, 2, 2);  // hidden dim 4
  std::vector<Complex> targets = {{-1, 0}, {-2, 0}, {-3, 1}, {-3, -1}};
  Mat K = place_pair_poles(base, targets, rng);
  auto eigs = eigenvalues(base.A22 + K * base.A12);
  auto key = [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  };
  std::sort(eigs.begin(), eigs.end(), key);
  std::sort(targets.begin(), targets.end(), key);
  for (std::size_t i = 0; i < targets.size(); ++i)
    CHECK(std::abs(eigs[i] - targets[i]) < 1e-6 * (1.0 + std::abs(targets[i])));
}

TEST_CASE("place_pair_poles reports unobservable modes") {
  PartitionedRealization base;
  base.A11 = Mat::Zero(1, 1);
  base.A12 = Mat::Zero(1, 2);
  base.A12(0, 0) = 1.0;  // second hidden state invisible
  base.A21 = Mat::Zero(2, 1);
  base.A22 = Mat::Zero(2, 2);
  base.A22(0, 0) = -1.0;
  base.A22(1, 1) = 5.0;
  base.B1 = Mat::Ones(1, 1);
  base.B2 = Mat::Ones(2, 1);
  Rng rng(49);
  CHECK_THROWS_WITH_AS(place_pair_poles(base, {{-1, 0}, {-2, 0}}, rng),
                       doctest::Contains("unobservable"), NumericalError);
}

TEST_CASE("place_pair_poles rejects a non-conjugate-closed target list") {
  Rng rng(51);
  PartitionedRealization base = random_partitioned(rng, 4, 1, 2);
  CHECK_THROWS_AS(place_pair_poles(base, {{-1, 1}, {-2, 0}}, rng), ValidationError);
}

TEST_CASE("sparsity_of a zero matrix is all false") {
  Rng rng(53);
  SparsityPattern pat = sparsity_of(RationalMatrix::constant(Mat::Zero(3, 2)), 1e-9, 12, rng);
  CHECK(pat.count() == 0);
}

TEST_CASE("lower-triangular W gives lower-triangular Q with false diagonal") {
  Rng rng(55);
  PartitionedRealization base;
  base.A11 = Mat::Zero(2, 2);
  base.A11 << -1.0, 0.0, 0.7, -2.0;
  base.A12 = Mat::Zero(2, 1);
  base.A12(1, 0) = 1.0;
  base.A21 = Mat::Zero(1, 2);
  base.A21(0, 0) = 1.0;
  base.A22 = Mat::Constant(1, 1, -3.0);
  base.B1 = rng.gaussian_mat(2, 1);
  base.B2 = rng.gaussian_mat(1, 1);
  ViablePair vp = viable_pair(base, Mat::Zero(1, 2));
  DSFPair dsf = dsf_from_viable(vp);

  SparsityPattern qp = sparsity_of(dsf.Q, 1e-9, 20, rng);
  CHECK(!qp.mask(0, 0));
  CHECK(!qp.mask(1, 1));
  CHECK(!qp.mask(0, 1));
  CHECK(qp.mask(1, 0));

  // mask(W) off-diagonal equals mask(Q); mask(V) equals mask(P)
  SparsityPattern wp = sparsity_of(vp.W, 1e-9, 20, rng);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      if (i != j) CHECK(wp.mask(i, j) == qp.mask(i, j));
  SparsityPattern vpat = sparsity_of(vp.V, 1e-9, 20, rng);
  SparsityPattern ppat = sparsity_of(dsf.P, 1e-9, 20, rng);
  CHECK((vpat.mask.array() == ppat.mask.array()).all());
}

TEST_CASE("check_viability passes on constructed pairs") {
  Rng rng(57);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  ViablePair vp = viable_pair(base, rng.gaussian_mat(3, 2));
  ViabilityReport rep = check_viability(vp, rng);
  CHECK(rep.pass);
  CHECK(rep.degree <= 3);
  CHECK(rep.identity_error < 1e-8);
}

TEST_CASE("check_viability flags a degree-violating W") {
  Rng rng(59);
  PartitionedRealization base = random_partitioned(rng, 4, 2, 2);
  ViablePair vp = viable_pair(base, Mat::Zero(2, 2));

  // Append an extra uncancelled pole to W: W'(l) = W(l) + e1 e1^T / (l + 7).
  ViablePair broken = vp;
  const Index nz = vp.w_ss.order();
  StateSpace aug;
  aug.domain = vp.w_ss.domain;
  aug.A = Mat::Zero(nz + 1, nz + 1);
  aug.A.topLeftCorner(nz, nz) = vp.w_ss.A;
  aug.A(nz, nz) = -7.0;
  aug.B = Mat::Zero(nz + 1, 2);
  aug.B.topRows(nz) = vp.w_ss.B;
  aug.B(nz, 0) = 1.0;
  aug.C = Mat::Zero(2, nz + 1);
  aug.C.leftCols(nz) = vp.w_ss.C;
  aug.C(0, nz) = 1.0;
  aug.D = vp.w_ss.D;
  broken.w_ss = aug;
  broken.W = RationalMatrix::from_state_space(aug);

  ViabilityReport rep = check_viability(broken, rng);
  CHECK(!rep.pass);
  CHECK(!rep.degree_ok);
  CHECK(rep.degree - rep.degree_bound == 1);
}

TEST_CASE("pole placement then viable_pair leaves only target poles in the pair") {
  Rng rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    auto [base, K] = random_stable_pair_base(rng, 5, 2, 2, Domain::Continuous);
    ViablePair vp = viable_pair(base, K);
    for (const auto& lam : eigenvalues(vp.pole_matrix()))
      CHECK(is_stable(lam, Domain::Continuous));
    CHECK(check_viability(vp, rng).pass);
  }
}
