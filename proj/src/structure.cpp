#include "dsf/structure.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace dsf {

ViablePair viable_pair(const PartitionedRealization& base, const Mat& K) {
  base.validate();
  const Index p = base.p(), nz = base.hidden();
  if (K.rows() != nz || K.cols() != p) {
    throw ValidationError("K has shape " + std::to_string(K.rows()) + "x" +
                          std::to_string(K.cols()) + ", expected " + std::to_string(nz) + "x" +
                          std::to_string(p));
  }
  require_finite(K, "K");

  ViablePair vp;
  vp.base = base;
  vp.K = K;

  Mat S = base.A22 + K * base.A12;  // shared pole matrix of W and V
  vp.w_ss.A = S;
  vp.w_ss.B = K * base.A11 + base.A21 - base.A22 * K - K * base.A12 * K;
  vp.w_ss.C = base.A12;
  vp.w_ss.D = base.A11 - base.A12 * K;
  vp.w_ss.domain = base.domain;

  vp.v_ss.A = S;
  vp.v_ss.B = K * base.B1 + base.B2;
  vp.v_ss.C = base.A12;
  vp.v_ss.D = base.B1;
  vp.v_ss.domain = base.domain;

  vp.W = RationalMatrix::from_state_space(vp.w_ss);
  vp.V = RationalMatrix::from_state_space(vp.v_ss);
  return vp;
}

DSFPair dsf_from_viable(const ViablePair& vp) {
  DSFPair dsf;
  dsf.w_ss = vp.w_ss;
  dsf.v_ss = vp.v_ss;
  dsf.domain = vp.base.domain;
  dsf.D = vp.W.diagonal();
  RationalMatrix resolvent = (RationalMatrix::lambda_identity(vp.p()) - dsf.D).inverse();
  dsf.Q = resolvent * (vp.W - dsf.D);
  dsf.P = resolvent * vp.V;
  return dsf;
}

namespace {

// Real block-diagonal matrix with the given conjugate-closed spectrum.
Mat spectrum_block_diag(const std::vector<Complex>& targets) {
  std::vector<Complex> upper;
  std::vector<double> reals;
  std::vector<Complex> pool = targets;
  const double tol = 1e-9;
  while (!pool.empty()) {
    Complex z = pool.back();
    pool.pop_back();
    if (std::abs(z.imag()) <= tol * (1.0 + std::abs(z))) {
      reals.push_back(z.real());
      continue;
    }
    auto it = std::find_if(pool.begin(), pool.end(), [&](Complex w) {
      return std::abs(w - std::conj(z)) <= 1e-9 * (1.0 + std::abs(z));
    });
    if (it == pool.end())
      throw ValidationError("target pole multiset is not closed under conjugation");
    pool.erase(it);
    upper.push_back(z.imag() > 0 ? z : std::conj(z));
  }
  const Index n = static_cast<Index>(reals.size() + 2 * upper.size());
  Mat g = Mat::Zero(n, n);
  Index at = 0;
  std::sort(reals.begin(), reals.end());
  for (double r : reals) g(at, at) = r, ++at;
  std::sort(upper.begin(), upper.end(),
            [](Complex a, Complex b) { return std::make_pair(a.real(), a.imag()) <
                                              std::make_pair(b.real(), b.imag()); });
  for (Complex z : upper) {
    g(at, at) = z.real();
    g(at, at + 1) = z.imag();
    g(at + 1, at) = -z.imag();
    g(at + 1, at + 1) = z.real();
    at += 2;
  }
  return g;
}

}  // namespace

Mat place_pair_poles(const PartitionedRealization& base, const std::vector<Complex>& targets,
                     Rng& rng, int max_retries) {
  base.validate();
  const Index p = base.p(), nz = base.hidden();
  if (static_cast<Index>(targets.size()) != nz)
    throw ValidationError("expected " + std::to_string(nz) + " target poles, got " +
                          std::to_string(targets.size()));
  if (nz == 0) return Mat(0, p);

  // PBH observability of (A12, A22) at every eigenvalue of A22.
  std::vector<Complex> unobs;
  for (const auto& lam : eigenvalues(base.A22)) {
    CMat pbh(nz + p, nz);
    pbh.topRows(nz) = lam * CMat::Identity(nz, nz) - base.A22.cast<Complex>();
    pbh.bottomRows(p) = base.A12.cast<Complex>();
    if (numerical_rank(pbh, 1e-9) < nz) unobs.push_back(lam);
  }
  if (!unobs.empty()) {
    std::string msg = "pair (A12, A22) is unobservable at mode(s):";
    for (auto z : unobs)
      msg += " (" + std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")";
    throw NumericalError(msg);
  }

  Mat G = spectrum_block_diag(targets);

  // Dual-pair Sylvester assignment: solve A22^T X - X G = -A12^T H, then
  // K = (H X^{-1})^T places eig(A22 + K A12) at the spectrum of G.
  double best_rcond = -1.0;
  Mat best_K;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Mat H = rng.gaussian_mat(p, nz);
    Mat X;
    try {
      X = solve_sylvester(base.A22.transpose(), G, -base.A12.transpose() * H);
    } catch (const NumericalError&) {
      // A target coincides with an eigenvalue of A22; retrying with fresh H
      // cannot help.
      throw;
    }
    Eigen::PartialPivLU<Mat> lu(X);
    double rc = lu.rcond();
    if (rc > best_rcond) {
      best_rcond = rc;
      // K^T = H X^{-1}, i.e. K = X^{-T} H^T.
      best_K = X.transpose().partialPivLu().solve(H.transpose());
    }
    if (rc > 1e-10) break;
  }
  if (best_rcond <= 1e-14)
    throw NumericalError("pole placement failed: solvent X singular after retries (rcond " +
                         std::to_string(best_rcond) + ")");
  return best_K;
}

Index SparsityPattern::count() const {
  Index c = 0;
  for (Index i = 0; i < mask.rows(); ++i)
    for (Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j)) ++c;
  return c;
}

SparsityPattern sparsity_of(const RationalMatrix& r, double tol_rel, int nsamples, Rng& rng) {
  if (nsamples < 10) throw ValidationError("sparsity_of needs at least 10 samples");
  if (tol_rel <= 0) throw ValidationError("sparsity tolerance must be positive");

  SparsityPattern pat;
  pat.tol_rel = tol_rel;
  pat.mask = BoolMat::Constant(r.rows(), r.cols(), false);

  const double radius = 2.0 * (1.0 + r.spectral_radius_bound());
  std::vector<CMat> values;
  int budget = 50 * nsamples;
  while (static_cast<int>(values.size()) < nsamples && budget-- > 0) {
    Complex lam = rng.complex_in_disk(radius);
    try {
      values.push_back(r.eval(lam));
      pat.samples.push_back(lam);
    } catch (const PoleError&) {
      // resample away from the pole
    }
  }
  if (static_cast<int>(values.size()) < nsamples)
    throw NumericalError("sparsity sampling exhausted its retry budget (poles everywhere?)");

  double scale = 0.0;
  for (const auto& v : values) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  if (scale == 0.0) return pat;  // identically zero matrix
  for (const auto& v : values)
    for (Index i = 0; i < v.rows(); ++i)
      for (Index j = 0; j < v.cols(); ++j)
        if (std::abs(v(i, j)) >= tol_rel * scale) pat.mask(i, j) = true;
  return pat;
}

double max_relative_error(const RationalMatrix& lhs, const RationalMatrix& rhs, Rng& rng,
                          int nsamples) {
  const double radius =
      2.0 * (1.0 + std::max(lhs.spectral_radius_bound(), rhs.spectral_radius_bound()));
  double worst = 0.0;
  int got = 0, budget = 50 * nsamples;
  while (got < nsamples && budget-- > 0) {
    Complex lam = rng.complex_in_disk(radius);
    try {
      CMat a = lhs.eval(lam);
      CMat b = rhs.eval(lam);
      double denom = std::max(b.norm(), 1e-300);
      worst = std::max(worst, (a - b).norm() / denom);
      ++got;
    } catch (const PoleError&) {
    }
  }
  if (got < nsamples)
    throw NumericalError("identity sampling exhausted its retry budget near poles");
  return worst;
}

ViabilityReport check_viability(const ViablePair& vp, Rng& rng, int nsamples, double tol) {
  ViabilityReport rep;
  McMillanDegree deg = mcmillan_degree(vp.W, 1e-9);
  rep.degree = deg.degree;
  rep.degree_bound = vp.hidden();
  rep.degree_ok = deg.degree <= vp.hidden();
  rep.degree_borderline = deg.borderline;

  RationalMatrix lhs =
      (RationalMatrix::lambda_identity(vp.p()) - vp.W).inverse() * vp.V;
  RationalMatrix L = vp.plant();
  const double radius = 2.0 * (1.0 + std::max(lhs.spectral_radius_bound(),
                                              L.spectral_radius_bound()));
  int got = 0, budget = 50 * nsamples;
  while (got < nsamples && budget-- > 0) {
    Complex lam = rng.complex_in_disk(radius);
    try {
      CMat a = lhs.eval(lam);
      CMat b = L.eval(lam);
      double err = (a - b).norm() / std::max(b.norm(), 1e-300);
      if (err > rep.identity_error) {
        rep.identity_error = err;
        rep.worst_lambda = lam;
      }
      ++got;
    } catch (const PoleError&) {
    }
  }
  if (got < nsamples) throw NumericalError("viability sampling exhausted its retry budget");
  rep.pass = rep.degree_ok && rep.identity_error < tol;
  return rep;
}

}  // namespace dsf
