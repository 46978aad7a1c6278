#pragma once

#include <vector>

#include "dsf/common.hpp"

namespace dsf {

/// Real Schur decomposition A = Q T Q^T with T quasi upper triangular.
/// eigs lists the eigenvalues in diagonal-block order (conjugate pairs stay
/// adjacent, matching their 2x2 block).
struct SchurForm {
  Mat Q;
  Mat T;
  std::vector<Complex> eigs;

  Index order() const { return T.rows(); }
};

/// One diagonal block of a quasi-triangular T: position, size (1 or 2) and
/// its eigenvalue (for 2x2 blocks, the one with positive imaginary part).
struct SchurBlock {
  Index start = 0;
  Index size = 1;
  Complex eig;
};

std::vector<SchurBlock> schur_blocks(const Mat& T);

SchurForm schur_decompose(const Mat& A);

/// Reorders a real Schur form so the selected eigenvalues occupy the leading
/// diagonal blocks. 2x2 conjugate blocks are never split; a predicate that
/// disagrees on a conjugate pair is rejected.
SchurForm schur_ordered(const Mat& A, const EigPredicate& select);

/// Brings the listed blocks (indices into schur_blocks(form.T)) to the front,
/// in the order given. Used for invariant-subspace enumeration.
SchurForm schur_reorder_blocks(const SchurForm& form, const std::vector<int>& selected);

std::vector<Complex> eigenvalues(const Mat& A);

/// SVD rank: number of singular values above tol_rel * sigma_max.
Index numerical_rank(const Mat& A, double tol_rel = kDefaultTolRel);
Index numerical_rank(const CMat& A, double tol_rel = kDefaultTolRel);

/// Smallest singular value over the largest (0 for an empty matrix treated
/// as full-rank margin 1). Margin reported by the rank certificates.
double rank_margin(const CMat& A);

/// Solves A X - X B = C. Requires the spectra of A and B to be disjoint.
Mat solve_sylvester(const Mat& A, const Mat& B, const Mat& C);

}  // namespace dsf
