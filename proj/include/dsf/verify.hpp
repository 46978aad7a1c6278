#pragma once

#include "dsf/riccati.hpp"

namespace dsf {

struct Check {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  Complex worst_lambda{0, 0};
  std::string note;
};

struct Report {
  std::vector<Check> checks;

  bool all_pass() const;
  void add(Check c) { checks.push_back(std::move(c)); }
};

/// Numerical left-coprimeness certificate for a viable pair: the compound
/// [lambda I - W, V] must keep full row rank everywhere. Random points are
/// tested on the evaluated compound; candidate zeros (the realization
/// eigenvalues, where the compound itself has poles) are tested through the
/// system pencil of the compound's pencil realization. Rank margins are the
/// smallest relative singular values.
Report coprimeness_certificate(const ViablePair& vp, Rng& rng, int nsamples = 30,
                               double margin_tol = 1e-8);

/// Same certificate for a proper compound [M N] held as one realization:
/// candidate zeros are the invariant zeros (generalized eigenvalues of the
/// system pencil), plus random-point rank tests.
Report coprimeness_certificate(const CoprimeFactors& cf, Rng& rng, int nsamples = 30,
                               double margin_tol = 1e-8);

/// Probes whether the DSF factors hide an unstable cancellation: at each
/// unstable zero of (lambda I - D(lambda)), the pair (I - Q, P) either keeps
/// the point as a pole of L (benign) or carries an uncancelled factor pole
/// that vanishes from L = (I - Q)^{-1} P, which certifies non-coprimeness.
Report dsf_coprimeness_probe(const DSFPair& dsf);

/// Max relative errors of the three pipeline identities
///   L = (lambda I - W)^{-1} V,  L = (I - Q)^{-1} P,  L = M^{-1} N
/// over one shared sample grid away from poles.
Report identity_suite(const StateSpace& sys, const ViablePair& vp, const DSFPair& dsf,
                      const CoprimeFactors& cf, Rng& rng, int nsamples = 20, double tol = 1e-8);

/// Unstable zeros of lambda - d(lambda) for each diagonal entry d = W_ii,
/// computed as eigenvalues of the inverse-system matrix of each entry.
/// Exposed for tests and reports.
std::vector<std::pair<Index, Complex>> unstable_diagonal_zeros(const DSFPair& dsf);

/// Pencil realization of the improper compound [lambda I - W, V] of a viable
/// pair, centered at lambda0 (which must not be a pole). Minimal whenever the
/// underlying plant is controllable and (A12, A22) is observable.
PencilRealization compound_factor_pencil(const ViablePair& vp, double lambda0);

}  // namespace dsf
