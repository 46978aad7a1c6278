#pragma once

#include "dsf/structure.hpp"

namespace dsf {

/// Pole-displacement factor Theta(lambda) = T5 (lambda I - Ax)^{-1} T4.
/// Premultiplying [lambda I - W, V] by it absorbs the p first-order poles at
/// infinity, leaving a stable proper factor pair.
struct ThetaFactor {
  Mat Ax, T4, T5;

  static ThetaFactor defaults(Domain d, Index p);
  void validate(Domain d) const;
};

/// Stable left coprime factors M^{-1} N = L, held as one compound
/// realization [M N] with p outputs and p + m inputs.
struct CoprimeFactors {
  StateSpace mn;  // D = [D_M D_N]
  Index p = 0, m = 0;
  std::vector<Complex> poles;  // realization spectrum
  Domain domain = Domain::Continuous;
  bool plant_controllable = true;  // informational flag from nett_jacobson

  RationalMatrix compound() const { return RationalMatrix::from_state_space(mn); }
  RationalMatrix M() const;
  RationalMatrix N() const;
  /// M^{-1} N as an evaluable rational matrix.
  RationalMatrix transfer() const { return M().inverse() * N(); }
};

/// Builds [M N] = Theta * [lambda I - W, V] as one block realization with
/// state matrix [[Ax, T4 A12],[0, A22 + K A12]]; the spectrum is exactly
/// eig(Ax) together with the pair poles. Requires the pair poles stable.
CoprimeFactors stable_coprime_from_viable(const ViablePair& vp, const ThetaFactor& theta);

/// Observer-form parameterization of all left coprime factorizations:
/// [M N] = U^{-1} [ (A - F C) - lambda I | -F  B ; C | I  0 ].
/// F must place eig(A - F C) inside the stability region.
CoprimeFactors nett_jacobson(const StateSpace& sys, const Mat& F, const Mat& U);

/// The output-injection gain, stacked [F1; F2], that reproduces the
/// Theta-based factorization through the observer parameterization:
///   F1 = (T4^{-1} Ax T4) - A11 + A12 K
///   F2 = -K (T4^{-1} Ax T4) + A22 K - A21.
/// Note the sign convention: this gain enters the compound realization with
/// state matrix A + F C (injection form). nett_jacobson stabilizes A - F C,
/// so pass the negation there (and U = (T5 T4)^{-1}) to reproduce
/// stable_coprime_from_viable exactly.
Mat feedback_from_theta(const PartitionedRealization& base, const Mat& K, const Mat& Ax,
                        const Mat& T4);

}  // namespace dsf
