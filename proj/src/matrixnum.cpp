#include "dsf/matrixnum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <lapacke.h>

namespace dsf {

void require_finite(const Mat& m, const std::string& name) {
  if (!m.allFinite()) {
    throw ValidationError(name + " contains NaN or Inf entries");
  }
}

int Rng::uniform_int(int a, int b) {
  std::uniform_int_distribution<int> d(a, b);
  return d(gen_);
}

Mat Rng::gaussian_mat(Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gaussian();
  return m;
}

Mat Rng::orthogonal(Index n) {
  if (n == 0) return Mat(0, 0);
  Eigen::HouseholderQR<Mat> qr(gaussian_mat(n, n));
  Mat q = qr.householderQ();
  // Fix signs so the distribution is Haar-like and deterministic.
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

Mat Rng::stable_matrix(Index n, Domain d, double margin) {
  if (n == 0) return Mat(0, 0);
  Mat a = gaussian_mat(n, n);
  Eigen::EigenSolver<Mat> es(a);
  if (d == Domain::Continuous) {
    double max_re = es.eigenvalues().real().maxCoeff();
    return a - (max_re + margin) * Mat::Identity(n, n);
  }
  double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  return a * ((1.0 - margin) / std::max(rho, 1e-12));
}

Complex Rng::complex_in_disk(double radius) {
  double r = radius * std::sqrt(uniform(0.04, 1.0));
  double th = uniform(0.0, 2.0 * M_PI);
  return Complex(r * std::cos(th), r * std::sin(th));
}

std::vector<Complex> Rng::stable_targets(Index n, Domain d) {
  std::vector<Complex> out;
  while (static_cast<Index>(out.size()) < n) {
    bool pair = (n - static_cast<Index>(out.size()) >= 2) && uniform(0.0, 1.0) < 0.5;
    if (d == Domain::Continuous) {
      double re = uniform(-3.0, -0.3);
      if (pair) {
        double im = uniform(0.2, 2.0);
        out.emplace_back(re, im);
        out.emplace_back(re, -im);
      } else {
        out.emplace_back(re, 0.0);
      }
    } else {
      double r = uniform(0.05, 0.85);
      if (pair) {
        double th = uniform(0.2, M_PI - 0.2);
        out.emplace_back(r * std::cos(th), r * std::sin(th));
        out.emplace_back(r * std::cos(th), -r * std::sin(th));
      } else {
        out.emplace_back(uniform(0.0, 1.0) < 0.5 ? -r : r, 0.0);
      }
    }
  }
  return out;
}

std::vector<SchurBlock> schur_blocks(const Mat& T) {
  std::vector<SchurBlock> blocks;
  const Index n = T.rows();
  Index i = 0;
  while (i < n) {
    SchurBlock b;
    b.start = i;
    if (i + 1 < n && T(i + 1, i) != 0.0) {
      b.size = 2;
      // Standardized 2x2 block: equal diagonal, eigenvalues a +- i*sqrt(-bc).
      double a = 0.5 * (T(i, i) + T(i + 1, i + 1));
      double prod = T(i, i + 1) * T(i + 1, i);
      double im = prod < 0.0 ? std::sqrt(-prod) : 0.0;
      b.eig = Complex(a, im);
    } else {
      b.size = 1;
      b.eig = Complex(T(i, i), 0.0);
    }
    blocks.push_back(b);
    i += b.size;
  }
  return blocks;
}

namespace {

std::vector<Complex> eigs_from_blocks(const Mat& T) {
  std::vector<Complex> eigs;
  for (const auto& b : schur_blocks(T)) {
    if (b.size == 1) {
      eigs.push_back(b.eig);
    } else {
      eigs.push_back(b.eig);
      eigs.push_back(std::conj(b.eig));
    }
  }
  return eigs;
}

}  // namespace

SchurForm schur_decompose(const Mat& A) {
  require_finite(A, "schur input");
  if (A.rows() != A.cols()) throw ValidationError("schur input must be square");
  const Index n = A.rows();
  SchurForm f;
  f.T = A;
  f.Q = Mat::Identity(n, n);
  if (n == 0) return f;
  std::vector<double> wr(n), wi(n);
  lapack_int sdim = 0;
  lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, static_cast<lapack_int>(n),
                                  f.T.data(), static_cast<lapack_int>(n), &sdim, wr.data(),
                                  wi.data(), f.Q.data(), static_cast<lapack_int>(n));
  if (info != 0) throw NumericalError("dgees failed to converge, info=" + std::to_string(info));
  f.eigs = eigs_from_blocks(f.T);
  return f;
}

namespace {

// Moves the block starting at row `from` to row `to` (to < from) by adjacent
// swaps. Throws with the offending block position if a swap is rejected.
void move_block_up(Mat& T, Mat& Q, Index from, Index to) {
  const lapack_int n = static_cast<lapack_int>(T.rows());
  lapack_int ifst = static_cast<lapack_int>(from) + 1;  // 1-based
  lapack_int ilst = static_cast<lapack_int>(to) + 1;
  lapack_int info = LAPACKE_dtrexc(LAPACK_COL_MAJOR, 'V', n, T.data(), n, Q.data(), n, &ifst, &ilst);
  if (info != 0) {
    throw NumericalError("schur reordering failed: ill-conditioned swap at block row " +
                         std::to_string(static_cast<long long>(from)) + " (dtrexc info=" +
                         std::to_string(info) + ")");
  }
}

}  // namespace

SchurForm schur_reorder_blocks(const SchurForm& form, const std::vector<int>& selected) {
  SchurForm f = form;
  const auto orig_blocks = schur_blocks(form.T);
  for (int idx : selected) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= orig_blocks.size())
      throw ValidationError("schur reorder: block index out of range");
  }
  // Track the current layout as a permutation of original block indices.
  // dgees-standardized 2x2 blocks hold complex pairs, so dtrexc never splits
  // them and block sizes are stable under moves.
  std::vector<int> layout(orig_blocks.size());
  for (std::size_t i = 0; i < layout.size(); ++i) layout[i] = static_cast<int>(i);
  auto row_of = [&](std::size_t pos) {
    Index row = 0;
    for (std::size_t j = 0; j < pos; ++j) row += orig_blocks[static_cast<std::size_t>(layout[j])].size;
    return row;
  };
  std::size_t insert_pos = 0;
  for (int want : selected) {
    std::size_t cur = insert_pos;
    while (cur < layout.size() && layout[cur] != want) ++cur;
    if (cur == layout.size())
      throw ValidationError("schur reorder: duplicate or already-consumed block index");
    if (cur != insert_pos) {
      move_block_up(f.T, f.Q, row_of(cur), row_of(insert_pos));
      int moved = layout[cur];
      layout.erase(layout.begin() + static_cast<std::ptrdiff_t>(cur));
      layout.insert(layout.begin() + static_cast<std::ptrdiff_t>(insert_pos), moved);
    }
    ++insert_pos;
  }
  f.eigs = eigs_from_blocks(f.T);
  return f;
}

SchurForm schur_ordered(const Mat& A, const EigPredicate& select) {
  SchurForm base = schur_decompose(A);
  auto blocks = schur_blocks(base.T);
  std::vector<int> chosen;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.size == 2) {
      bool s1 = select(b.eig);
      bool s2 = select(std::conj(b.eig));
      if (s1 != s2) {
        throw ValidationError(
            "selection splits a complex-conjugate 2x2 Schur block (eig " +
            std::to_string(b.eig.real()) + " +- " + std::to_string(b.eig.imag()) + "i)");
      }
      if (s1) chosen.push_back(static_cast<int>(i));
    } else if (select(b.eig)) {
      chosen.push_back(static_cast<int>(i));
    }
  }
  return schur_reorder_blocks(base, chosen);
}

std::vector<Complex> eigenvalues(const Mat& A) {
  require_finite(A, "eigenvalue input");
  if (A.rows() != A.cols()) throw ValidationError("eigenvalue input must be square");
  if (A.rows() == 0) return {};
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  std::vector<Complex> out(A.rows());
  for (Index i = 0; i < A.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

namespace {

template <typename M>
Index rank_impl(const M& A, double tol_rel) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<M> svd(A);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  if (smax == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol_rel * smax) ++r;
  return r;
}

}  // namespace

Index numerical_rank(const Mat& A, double tol_rel) {
  require_finite(A, "rank input");
  if (tol_rel <= 0) throw ValidationError("rank tolerance must be positive");
  return rank_impl(A, tol_rel);
}

Index numerical_rank(const CMat& A, double tol_rel) {
  if (!A.allFinite()) throw ValidationError("rank input contains NaN or Inf entries");
  if (tol_rel <= 0) throw ValidationError("rank tolerance must be positive");
  return rank_impl(A, tol_rel);
}

double rank_margin(const CMat& A) {
  if (A.rows() == 0 || A.cols() == 0) return 1.0;
  Eigen::JacobiSVD<CMat> svd(A);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  if (smax == 0.0) return 0.0;
  return sv(sv.size() - 1) / smax;
}

Mat solve_sylvester(const Mat& A, const Mat& B, const Mat& C) {
  require_finite(A, "sylvester A");
  require_finite(B, "sylvester B");
  require_finite(C, "sylvester C");
  if (A.rows() != A.cols() || B.rows() != B.cols())
    throw ValidationError("sylvester A and B must be square");
  if (C.rows() != A.rows() || C.cols() != B.rows())
    throw ValidationError("sylvester C has incompatible shape");
  const Index m = A.rows(), n = B.rows();
  if (m == 0 || n == 0) return Mat(m, n);

  // Spectra separation guard: a (near-)common eigenvalue makes the equation
  // (numerically) singular.
  auto ea = eigenvalues(A);
  auto eb = eigenvalues(B);
  double scale = A.norm() + B.norm();
  for (const auto& la : ea)
    for (const auto& lb : eb)
      if (std::abs(la - lb) <= 1e-9 * (scale + 1.0))
        throw NumericalError("sylvester equation is singular: A and B share an eigenvalue near (" +
                             std::to_string(la.real()) + ", " + std::to_string(la.imag()) + ")");

  SchurForm fa = schur_decompose(A);
  SchurForm fb = schur_decompose(B);
  Mat Ct = fa.Q.transpose() * C * fb.Q;
  Mat Y = Ct;
  double trsyl_scale = 1.0;
  lapack_int info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, static_cast<lapack_int>(m),
                                   static_cast<lapack_int>(n), fa.T.data(), static_cast<lapack_int>(m),
                                   fb.T.data(), static_cast<lapack_int>(n), Y.data(),
                                   static_cast<lapack_int>(m), &trsyl_scale);
  if (info < 0) throw NumericalError("dtrsyl failed, info=" + std::to_string(info));
  if (info == 1 || trsyl_scale == 0.0)
    throw NumericalError("sylvester equation is numerically singular (perturbed solve reported)");
  Mat X = fa.Q * (Y / trsyl_scale) * fb.Q.transpose();

  double resid = (A * X - X * B - C).norm();
  double bound = 1e-10 * scale * X.norm() + 1e-12;
  if (resid > std::max(bound, 1e-10 * C.norm())) {
    throw NumericalError("sylvester residual " + std::to_string(resid) +
                         " exceeds bound " + std::to_string(bound));
  }
  return X;
}

}  // namespace dsf
