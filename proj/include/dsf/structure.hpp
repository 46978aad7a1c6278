#pragma once

#include "dsf/realization.hpp"

namespace dsf {

/// A viable (W, V) pair for L = (lambda I - W)^{-1} V, parameterized by the
/// free matrix K. W and V share the pole matrix A22 + K A12 and are backed by
/// explicit realizations, so deg(W) never exceeds the hidden state dimension.
struct ViablePair {
  PartitionedRealization base;
  Mat K;
  StateSpace w_ss, v_ss;  // shared A = A22 + K*A12
  RationalMatrix W, V;

  Index p() const { return base.p(); }
  Index hidden() const { return base.hidden(); }
  Mat pole_matrix() const { return w_ss.A; }
  RationalMatrix plant() const { return RationalMatrix::from_state_space(base.assemble()); }
};

ViablePair viable_pair(const PartitionedRealization& base, const Mat& K);

/// The DSF (Q, P) derived from a viable pair: D = diag(W),
/// Q = (lambda I - D)^{-1} (W - D), P = (lambda I - D)^{-1} V.
/// Q has identically zero diagonal, so its nonzero pattern reads as the
/// adjacency matrix of the signal-flow graph among the measured outputs.
struct DSFPair {
  RationalMatrix Q, P, D;
  StateSpace w_ss, v_ss;  // realizations behind W and V, kept for certificates
  Domain domain = Domain::Continuous;

  Index p() const { return Q.rows(); }
  Index inputs() const { return P.cols(); }
};

DSFPair dsf_from_viable(const ViablePair& vp);

/// Output-injection pole placement for the pair dynamics: returns K with
/// eig(A22 + K A12) at the requested (conjugate-closed) targets. Sylvester
/// based assignment on the dual pair, with re-randomized retries when the
/// solvent is ill conditioned.
Mat place_pair_poles(const PartitionedRealization& base, const std::vector<Complex>& targets,
                     Rng& rng, int max_retries = 20);

struct SparsityPattern {
  BoolMat mask;
  double tol_rel = 1e-9;
  std::vector<Complex> samples;

  Index count() const;
};

/// Entry (i,j) marked nonzero iff |R_ij(lambda)| exceeds tol_rel * scale at
/// some sample, with scale the largest entry magnitude seen anywhere.
/// Samples are drawn away from poles (resampled on pole hits).
SparsityPattern sparsity_of(const RationalMatrix& r, double tol_rel, int nsamples, Rng& rng);

struct ViabilityReport {
  bool pass = false;
  Index degree = 0;        // McMillan degree of W
  Index degree_bound = 0;  // hidden state dimension
  bool degree_ok = false;
  bool degree_borderline = false;
  double identity_error = 0.0;  // max relative error of L = (lambda I - W)^{-1} V
  Complex worst_lambda{0, 0};
};

/// Verifies the degree bound deg(W) <= n - p and the defining identity
/// pointwise on a sample grid.
ViabilityReport check_viability(const ViablePair& vp, Rng& rng, int nsamples = 20,
                                double tol = 1e-8);

/// Max over samples of ||lhs(l) - rhs(l)|| / ||rhs(l)||. Samples that hit a
/// pole of either side are resampled. Shared workhorse for identity checks.
double max_relative_error(const RationalMatrix& lhs, const RationalMatrix& rhs, Rng& rng,
                          int nsamples = 20);

}  // namespace dsf
