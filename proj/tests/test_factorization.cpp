#include <doctest.h>

#include <algorithm>

#include "dsf/factorization.hpp"
#include "test_helpers.hpp"

using namespace dsf;
using dsf::testing::random_partitioned;
using dsf::testing::random_stable_pair_base;

namespace {

// Output injection F with eig(A - F C) at the requested targets, via the
// same dual-pair Sylvester assignment used for pair poles.
Mat place_output_injection(const Mat& A, const Mat& C, const std::vector<Complex>& targets,
                           Rng& rng) {
  const Index n = A.rows(), p = C.rows();
  Mat G = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) G(i, i) = targets[static_cast<std::size_t>(i)].real();
  for (Index i = 0; i + 1 < n; ++i) {
    if (targets[static_cast<std::size_t>(i)].imag() != 0.0) {
      G(i, i + 1) = targets[static_cast<std::size_t>(i)].imag();
      G(i + 1, i) = -targets[static_cast<std::size_t>(i)].imag();
    }
  }
  for (int attempt = 0; attempt < 20; ++attempt) {
    Mat H = rng.gaussian_mat(p, n);
    Mat X = solve_sylvester(A.transpose(), G, -C.transpose() * H);
    if (Eigen::PartialPivLU<Mat>(X).rcond() > 1e-10)
      return -X.transpose().partialPivLu().solve(H.transpose());
  }
  throw NumericalError("test helper could not place output injection");
}

std::vector<Complex> sorted_eigs(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

}  // namespace

TEST_CASE("stable_coprime_from_viable scalar case matches the analytic factors") {
  PartitionedRealization base;
  base.A11 = Mat::Constant(1, 1, 0.5);  // w
  base.A12 = Mat(1, 0);
  base.A21 = Mat(0, 1);
  base.A22 = Mat(0, 0);
  base.B1 = Mat::Constant(1, 1, 2.0);  // b1
  base.B2 = Mat(0, 1);
  ViablePair vp = viable_pair(base, Mat(0, 1));

  ThetaFactor theta;
  theta.Ax = Mat::Constant(1, 1, -1.0);
  theta.T4 = Mat::Identity(1, 1);
  theta.T5 = Mat::Identity(1, 1);
  CoprimeFactors cf = stable_coprime_from_viable(vp, theta);

  for (double re : {0.0, 1.3, -0.4}) {
    Complex lam(re, 0.7);
    Complex m_expect = (lam - 0.5) / (lam + 1.0);
    Complex n_expect = 2.0 / (lam + 1.0);
    CHECK(std::abs(cf.M().eval(lam)(0, 0) - m_expect) < 1e-12);
    CHECK(std::abs(cf.N().eval(lam)(0, 0) - n_expect) < 1e-12);
  }
}

TEST_CASE("diagonal Ax with T4 = T5 = I preserves the pair's sparsity") {
  Rng rng(63);
  // Lower-triangular W, diagonal V-ish structure (same base as the
  // structure-module sparsity test).
  PartitionedRealization base;
  base.A11 = Mat::Zero(2, 2);
  base.A11 << -1.0, 0.0, 0.7, -2.0;
  base.A12 = Mat::Zero(2, 1);
  base.A12(1, 0) = 1.0;
  base.A21 = Mat::Zero(1, 2);
  base.A21(0, 0) = 1.0;
  base.A22 = Mat::Constant(1, 1, -3.0);
  base.B1 = Mat::Zero(2, 2);
  base.B1(0, 0) = 1.0;
  base.B1(1, 1) = 1.0;
  base.B2 = Mat::Zero(1, 2);
  ViablePair vp = viable_pair(base, Mat::Zero(1, 2));

  ThetaFactor theta;
  theta.Ax = Mat::Zero(2, 2);
  theta.Ax(0, 0) = -1.5;
  theta.Ax(1, 1) = -2.5;
  theta.T4 = Mat::Identity(2, 2);
  theta.T5 = Mat::Identity(2, 2);
  CoprimeFactors cf = stable_coprime_from_viable(vp, theta);

  SparsityPattern mask_m = sparsity_of(cf.M(), 1e-9, 20, rng);
  SparsityPattern mask_iw =
      sparsity_of(RationalMatrix::lambda_identity(2) - vp.W, 1e-9, 20, rng);
  CHECK((mask_m.mask.array() == mask_iw.mask.array()).all());

  SparsityPattern mask_n = sparsity_of(cf.N(), 1e-9, 20, rng);
  SparsityPattern mask_v = sparsity_of(vp.V, 1e-9, 20, rng);
  CHECK((mask_n.mask.array() == mask_v.mask.array()).all());
}

TEST_CASE("stable_coprime_from_viable satisfies M^{-1} N = L on a random stable pair") {
  Rng rng(65);
  auto [base, K] = random_stable_pair_base(rng, 5, 2, 2, Domain::Continuous);
  ViablePair vp = viable_pair(base, K);
  ThetaFactor theta;
  theta.Ax = -2.0 * Mat::Identity(2, 2);
  theta.T4 = Mat::Identity(2, 2);
  theta.T5 = Mat::Identity(2, 2);
  CoprimeFactors cf = stable_coprime_from_viable(vp, theta);
  CHECK(max_relative_error(cf.transfer(), vp.plant(), rng, 20) < 1e-8);
}

TEST_CASE("factor realization spectrum is eig(Ax) plus the pair poles") {
  Rng rng(67);
  auto [base, K] = random_stable_pair_base(rng, 6, 2, 2, Domain::Continuous);
  ViablePair vp = viable_pair(base, K);
  ThetaFactor theta;
  theta.Ax = rng.stable_matrix(2, Domain::Continuous);
  theta.T4 = rng.gaussian_mat(2, 2) + 3.0 * Mat::Identity(2, 2);
  theta.T5 = rng.gaussian_mat(2, 2) + 3.0 * Mat::Identity(2, 2);
  CoprimeFactors cf = stable_coprime_from_viable(vp, theta);

  std::vector<Complex> expected = eigenvalues(theta.Ax);
  for (const auto& z : eigenvalues(vp.pole_matrix())) expected.push_back(z);
  auto got = sorted_eigs(cf.poles);
  auto want = sorted_eigs(expected);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-8);
}

TEST_CASE("stable_coprime_from_viable rejects unstable pair poles") {
  Rng rng(69);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  base.A22 += 10.0 * Mat::Identity(3, 3);  // force instability
  ViablePair vp = viable_pair(base, Mat::Zero(3, 2));
  CHECK_THROWS_AS(stable_coprime_from_viable(vp, ThetaFactor::defaults(Domain::Continuous, 2)),
                  NumericalError);
}

TEST_CASE("nett_jacobson with F = 0 and stable A gives M = I, N = L") {
  Rng rng(71);
  StateSpace sys;
  sys.A = rng.stable_matrix(4, Domain::Continuous);
  sys.B = rng.gaussian_mat(4, 2);
  sys.C = rng.gaussian_mat(2, 4);
  sys.D = Mat::Zero(2, 2);
  CoprimeFactors cf = nett_jacobson(sys, Mat::Zero(4, 2), Mat::Identity(2, 2));
  RationalMatrix L = RationalMatrix::from_state_space(sys);
  for (int k = 0; k < 10; ++k) {
    Complex lam = rng.complex_in_disk(4.0);
    try {
      CHECK((cf.M().eval(lam) - CMat::Identity(2, 2)).norm() < 1e-12);
      CHECK((cf.N().eval(lam) - L.eval(lam)).norm() < 1e-10 * std::max(1.0, L.eval(lam).norm()));
    } catch (const PoleError&) {
    }
  }
}

TEST_CASE("nett_jacobson with a placed random F is stable and factors L") {
  Rng rng(73);
  StateSpace sys = dsf::testing::random_plant(rng, 4, 2, 2);
  std::vector<Complex> targets = {{-1, 0}, {-2, 0}, {-3, 0}, {-4, 0}};
  Mat F = place_output_injection(sys.A, sys.C, targets, rng);
  CoprimeFactors cf = nett_jacobson(sys, F, Mat::Identity(2, 2));
  for (const auto& z : cf.poles) CHECK(is_stable(z, Domain::Continuous));
  CHECK(max_relative_error(cf.transfer(), RationalMatrix::from_state_space(sys), rng, 20) < 1e-8);
}

TEST_CASE("nett_jacobson rejects an F that fails to stabilize") {
  Rng rng(75);
  StateSpace sys = dsf::testing::random_plant(rng, 3, 1, 1);
  sys.A += 5.0 * Mat::Identity(3, 3);
  CHECK_THROWS_AS(nett_jacobson(sys, Mat::Zero(3, 1), Mat::Identity(1, 1)), NumericalError);
}

TEST_CASE("feedback_from_theta trivial case T4=I, K=0, Ax=A11") {
  Rng rng(77);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  Mat F = feedback_from_theta(base, Mat::Zero(3, 2), base.A11, Mat::Identity(2, 2));
  CHECK(F.topRows(2).norm() < 1e-14);
  CHECK((F.bottomRows(3) + base.A21).norm() < 1e-14);
}

TEST_CASE("feedback_from_theta with T4 = I matches the injection-form gain") {
  Rng rng(79);
  PartitionedRealization base = random_partitioned(rng, 5, 2, 2);
  Mat K = rng.gaussian_mat(3, 2);
  Mat Ax = rng.stable_matrix(2, Domain::Continuous);
  Mat F = feedback_from_theta(base, K, Ax, Mat::Identity(2, 2));
  Mat F1 = Ax - base.A11 + base.A12 * K;
  Mat F2 = -K * Ax + base.A22 * K - base.A21;
  CHECK((F.topRows(2) - F1).norm() < 1e-12);
  CHECK((F.bottomRows(3) - F2).norm() < 1e-12);
}

TEST_CASE("observer-form factors reproduce the Theta-form factors pointwise") {
  // The gain of feedback_from_theta enters the compound realization as
  // A + F C; the observer parameterization stabilizes A - F C, so the bridge
  // is F -> -F with U = (T5 T4)^{-1}.
  Rng rng(81);
  for (int trial = 0; trial < 5; ++trial) {
    auto [base, K] = random_stable_pair_base(rng, 5, 2, 2, Domain::Continuous);
    ViablePair vp = viable_pair(base, K);
    ThetaFactor theta;
    theta.Ax = rng.stable_matrix(2, Domain::Continuous);
    theta.T4 = rng.gaussian_mat(2, 2) + 3.0 * Mat::Identity(2, 2);
    theta.T5 = rng.gaussian_mat(2, 2) + 3.0 * Mat::Identity(2, 2);
    CoprimeFactors cf_theta = stable_coprime_from_viable(vp, theta);

    Mat F = feedback_from_theta(base, K, theta.Ax, theta.T4);
    Mat U = Mat(theta.T5 * theta.T4).partialPivLu().solve(Mat::Identity(2, 2));
    CoprimeFactors cf_nj = nett_jacobson(base.assemble(), -F, U);

    CHECK(max_relative_error(cf_nj.compound(), cf_theta.compound(), rng, 20) < 1e-8);
  }
}
