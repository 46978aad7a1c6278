#pragma once

#include "dsf/factorization.hpp"

namespace dsf {

/// Data of the quadratic matrix equation
///   K (A11 + F1) - A22 K - K A12 K + (A21 + F2) = 0
/// extracted from a stable compound factor realization in injection form.
struct RiccatiProblem {
  Mat A11, A12, A21, A22, F1, F2;
  Domain domain = Domain::Continuous;

  Index p() const { return A11.rows(); }
  Index hidden() const { return A22.rows(); }
  /// Associated block matrix [[A11+F1, -A12],[-(A21+F2), A22]] whose
  /// p-dimensional invariant subspaces carry the solutions.
  Mat a_plus() const;
  void validate() const;
};

struct RiccatiSolution {
  Mat K;            // (n-p) x p
  Mat V1, V2;       // subspace basis blocks, [V1; V2] orthonormal columns
  double residual = 0.0;
  double v1_rcond = 1.0;
  std::vector<Complex> closed_spectrum;  // eig(A11 + F1 - A12 K)
  int alternatives = 0;  // other feasible (disconjugate) subspace choices seen
};

/// Solves the equation through an ordered Schur decomposition of a_plus():
/// enumerates p-dimensional invariant subspaces (respecting 2x2 conjugate
/// blocks), keeps the one whose V1 block is best conditioned, applies one
/// Sylvester defect-correction pass, and reports how many other feasible
/// choices existed. Throws when no subspace has an invertible V1.
RiccatiSolution solve_riccati(const RiccatiProblem& prob);

struct RecoveredPair {
  ViablePair vp;
  Mat Ax;
  RiccatiSolution riccati;
  double roundtrip_error = 0.0;  // pointwise mismatch of the rebuilt [M N]
};

/// Inverse direction: from a stable left coprime factorization to its unique
/// viable (W, V) pair. The compound realization is normalized to output map
/// [I 0] and feedthrough [I 0] first; the plant blocks are read off, the
/// Riccati equation solved, and the pair rebuilt from the recovered K.
RecoveredPair recover_viable(const CoprimeFactors& cf, Rng& rng);

namespace detail {
/// Test hook: K from one explicit subspace choice. The vector order fixes
/// the reordering sequence; any permutation of the same subset spans the
/// same subspace, so K must not depend on it.
Mat riccati_k_for_subset(const Mat& a_plus, const std::vector<int>& subset_blocks);
}  // namespace detail

}  // namespace dsf
