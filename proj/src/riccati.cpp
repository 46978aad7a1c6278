#include "dsf/riccati.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace dsf {

Mat RiccatiProblem::a_plus() const {
  const Index np = p(), nz = hidden();
  Mat ap(np + nz, np + nz);
  ap.topLeftCorner(np, np) = A11 + F1;
  ap.topRightCorner(np, nz) = -A12;
  ap.bottomLeftCorner(nz, np) = -(A21 + F2);
  ap.bottomRightCorner(nz, nz) = A22;
  return ap;
}

void RiccatiProblem::validate() const {
  const Index np = p(), nz = hidden();
  auto shape = [&](const Mat& m, Index r, Index c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw ValidationError(std::string(name) + " has wrong shape in RiccatiProblem");
  };
  shape(A11, np, np, "A11");
  shape(A12, np, nz, "A12");
  shape(A21, nz, np, "A21");
  shape(A22, nz, nz, "A22");
  shape(F1, np, np, "F1");
  shape(F2, nz, np, "F2");
  require_finite(a_plus(), "A+");
}

namespace {

double riccati_residual(const RiccatiProblem& prob, const Mat& K) {
  return (K * (prob.A11 + prob.F1) - prob.A22 * K - K * prob.A12 * K + (prob.A21 + prob.F2))
      .norm();
}

// All subsets of Schur blocks whose sizes sum to p, in deterministic order.
void enumerate_subsets(const std::vector<SchurBlock>& blocks, Index p, std::size_t from,
                       Index acc, std::vector<int>& cur, std::vector<std::vector<int>>& out,
                       std::size_t cap) {
  if (out.size() >= cap) return;
  if (acc == p) {
    out.push_back(cur);
    return;
  }
  if (from >= blocks.size() || acc > p) return;
  // include blocks[from]
  cur.push_back(static_cast<int>(from));
  enumerate_subsets(blocks, p, from + 1, acc + blocks[from].size, cur, out, cap);
  cur.pop_back();
  // skip blocks[from]
  enumerate_subsets(blocks, p, from + 1, acc, cur, out, cap);
}

struct SubspaceCandidate {
  std::vector<int> subset;
  Mat V1, V2;
  double v1_rcond = 0.0;
};

SubspaceCandidate try_subset(const SchurForm& base, const std::vector<int>& subset, Index p) {
  SchurForm ordered = schur_reorder_blocks(base, subset);
  SubspaceCandidate cand;
  cand.subset = subset;
  Mat V = ordered.Q.leftCols(p);
  cand.V1 = V.topRows(p);
  cand.V2 = V.bottomRows(V.rows() - p);
  cand.v1_rcond = p == 0 ? 1.0 : Eigen::PartialPivLU<Mat>(cand.V1).rcond();
  return cand;
}

}  // namespace

namespace detail {

Mat riccati_k_for_subset(const Mat& a_plus, const std::vector<int>& subset_blocks) {
  SchurForm base = schur_decompose(a_plus);
  Index p = 0;
  auto blocks = schur_blocks(base.T);
  for (int idx : subset_blocks) p += blocks.at(static_cast<std::size_t>(idx)).size;
  SubspaceCandidate cand = try_subset(base, subset_blocks, p);
  if (cand.v1_rcond < 1.0 / kPoleCondLimit)
    throw NumericalError("subspace choice has singular V1");
  return cand.V1.transpose().partialPivLu().solve(cand.V2.transpose()).transpose();
}

}  // namespace detail

RiccatiSolution solve_riccati(const RiccatiProblem& prob) {
  prob.validate();
  const Index p = prob.p(), nz = prob.hidden();

  RiccatiSolution sol;
  if (nz == 0 || p == 0) {
    sol.K = Mat(nz, p);
    sol.V1 = Mat::Identity(p, p);
    sol.V2 = Mat(nz, p);
    sol.residual = riccati_residual(prob, sol.K);
    sol.closed_spectrum = eigenvalues(prob.A11 + prob.F1 - prob.A12 * sol.K);
    return sol;
  }

  Mat ap = prob.a_plus();
  SchurForm base = schur_decompose(ap);
  auto blocks = schur_blocks(base.T);

  constexpr std::size_t kSubsetCap = 4096;
  std::vector<std::vector<int>> subsets;
  std::vector<int> cur;
  enumerate_subsets(blocks, p, 0, 0, cur, subsets, kSubsetCap);
  if (subsets.empty())
    throw NumericalError(
        "no invariant subspace of dimension p exists without splitting a conjugate pair");

  SubspaceCandidate best;
  int feasible = 0;
  for (const auto& subset : subsets) {
    SubspaceCandidate cand;
    try {
      cand = try_subset(base, subset, p);
    } catch (const NumericalError&) {
      continue;  // a swap failed for this ordering; treat as infeasible
    }
    if (cand.v1_rcond > 1.0 / kPoleCondLimit) ++feasible;
    if (cand.v1_rcond > best.v1_rcond) best = cand;
  }
  if (feasible == 0) {
    throw NumericalError(
        "Riccati equation has no disconjugate invariant subspace of dimension p "
        "(best V1 rcond " +
        std::to_string(best.v1_rcond) + "); the associated matrix is too defective");
  }

  // K = V2 V1^{-1}.
  Mat K = best.V1.transpose().partialPivLu().solve(best.V2.transpose()).transpose();

  // One Sylvester defect-correction pass.
  Mat R = K * (prob.A11 + prob.F1) - prob.A22 * K - K * prob.A12 * K + (prob.A21 + prob.F2);
  try {
    Mat X = prob.A11 + prob.F1 - prob.A12 * K;
    Mat Y = prob.A22 + K * prob.A12;
    Mat delta = solve_sylvester(Y, X, R);
    if (riccati_residual(prob, K + delta) < R.norm()) K += delta;
  } catch (const NumericalError&) {
    // near-coincident closed-loop spectra; keep the uncorrected K
  }

  sol.K = K;
  sol.V1 = best.V1;
  sol.V2 = best.V2;
  sol.v1_rcond = best.v1_rcond;
  sol.residual = riccati_residual(prob, K);
  sol.closed_spectrum = eigenvalues(prob.A11 + prob.F1 - prob.A12 * K);
  sol.alternatives = feasible - 1;

  double ap_norm = ap.norm();
  double bound = 1e-8 * (ap_norm * ap_norm + ap_norm);
  if (sol.residual > bound)
    throw NumericalError("Riccati residual " + std::to_string(sol.residual) +
                         " exceeds its bound " + std::to_string(bound));
  return sol;
}

RecoveredPair recover_viable(const CoprimeFactors& cf, Rng& rng) {
  cf.mn.validate("compound factors");
  const Index p = cf.p, m = cf.m, n = cf.mn.order();
  if (cf.mn.inputs() != p + m || cf.mn.outputs() != p)
    throw ValidationError("compound realization shape does not match (p, m)");

  for (const auto& lam : cf.poles.empty() ? eigenvalues(cf.mn.A) : cf.poles)
    if (!is_stable(lam, cf.domain))
      throw ValidationError("recover_viable requires a stable factor realization");

  // Left-normalize so the feedthrough of M is the identity.
  Mat Dm = cf.mn.D.leftCols(p);
  Eigen::PartialPivLU<Mat> dlu(Dm);
  if (p > 0 && dlu.rcond() < 1.0 / kPoleCondLimit)
    throw ValidationError("factor M has a singular feedthrough; not in observer form");
  Mat G = dlu.solve(Mat::Identity(p, p));
  Mat Cn = G * cf.mn.C;
  Mat Dn = G * cf.mn.D;
  if (m > 0 && Dn.rightCols(m).cwiseAbs().maxCoeff() >
                   1e-9 * std::max(1.0, cf.mn.D.cwiseAbs().maxCoeff()))
    throw ValidationError("factor N has a nonzero feedthrough after normalization");

  // State transform to output map [I 0].
  Mat T = output_canonical_transform(Cn);
  Eigen::PartialPivLU<Mat> tlu(T);
  Mat Tinv = tlu.solve(Mat::Identity(n, n));
  Mat Ahat = T * cf.mn.A * Tinv;
  Mat Bhat = T * cf.mn.B;

  Mat Fhat = Bhat.leftCols(p);
  Mat Bu = Bhat.rightCols(m);

  RiccatiProblem prob;
  prob.domain = cf.domain;
  prob.F1 = Fhat.topRows(p);
  prob.F2 = Fhat.bottomRows(n - p);
  prob.A11 = Ahat.topLeftCorner(p, p) - prob.F1;
  prob.A12 = Ahat.topRightCorner(p, n - p);
  prob.A21 = Ahat.bottomLeftCorner(n - p, p) - prob.F2;
  prob.A22 = Ahat.bottomRightCorner(n - p, n - p);

  RecoveredPair out;
  out.riccati = solve_riccati(prob);
  const Mat& K = out.riccati.K;
  out.Ax = prob.F1 + prob.A11 - prob.A12 * K;

  PartitionedRealization plant;
  plant.domain = cf.domain;
  plant.A11 = prob.A11;
  plant.A12 = prob.A12;
  plant.A21 = prob.A21;
  plant.A22 = prob.A22;
  plant.B1 = Bu.topRows(p);
  plant.B2 = Bu.bottomRows(n - p);
  out.vp = viable_pair(plant, K);

  // Rebuild [M N] from the recovered pair and compare against the input.
  ThetaFactor theta;
  theta.Ax = out.Ax;
  theta.T4 = Mat::Identity(p, p);
  theta.T5 = Mat::Identity(p, p);
  CoprimeFactors rebuilt = stable_coprime_from_viable(out.vp, theta);
  out.roundtrip_error = max_relative_error(rebuilt.compound(), cf.compound(), rng, 20);
  return out;
}

}  // namespace dsf
