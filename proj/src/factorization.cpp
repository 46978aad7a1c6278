#include "dsf/factorization.hpp"

#include <cmath>

#include <Eigen/LU>

namespace dsf {

namespace {

double rcond_of(const Mat& m) {
  if (m.rows() == 0) return 1.0;
  return Eigen::PartialPivLU<Mat>(m).rcond();
}

void check_rational_invertibility(const CoprimeFactors& cf) {
  // det M not identically zero: one well-conditioned sample is enough.
  RationalMatrix M = cf.M();
  double radius = 2.0 * (1.0 + M.spectral_radius_bound());
  for (int k = 0; k < 8; ++k) {
    double th = 0.9 * k + 0.37;
    Complex lam(radius * std::cos(th), radius * std::sin(th));
    try {
      CMat v = M.eval(lam);
      if (Eigen::PartialPivLU<CMat>(v).rcond() > 1e-12) return;
    } catch (const PoleError&) {
    }
  }
  throw NumericalError("factor M appears singular as a rational matrix");
}

}  // namespace

ThetaFactor ThetaFactor::defaults(Domain d, Index p) {
  ThetaFactor t;
  t.Ax = (d == Domain::Continuous ? -1.0 : 0.2) * Mat::Identity(p, p);
  t.T4 = Mat::Identity(p, p);
  t.T5 = Mat::Identity(p, p);
  return t;
}

void ThetaFactor::validate(Domain d) const {
  const Index p = Ax.rows();
  if (Ax.cols() != p || T4.rows() != p || T4.cols() != p || T5.rows() != p || T5.cols() != p)
    throw ValidationError("ThetaFactor blocks must all be p x p");
  require_finite(Ax, "Ax");
  require_finite(T4, "T4");
  require_finite(T5, "T5");
  for (const auto& lam : eigenvalues(Ax))
    if (!is_stable(lam, d))
      throw NumericalError("ThetaFactor Ax has an unstable eigenvalue (" +
                           std::to_string(lam.real()) + "," + std::to_string(lam.imag()) + ")");
  if (rcond_of(T4) < 1.0 / kPoleCondLimit) throw ValidationError("ThetaFactor T4 is singular");
  if (rcond_of(T5) < 1.0 / kPoleCondLimit) throw ValidationError("ThetaFactor T5 is singular");
}

RationalMatrix CoprimeFactors::M() const {
  Mat sel = Mat::Zero(p + m, p);
  sel.topRows(p) = Mat::Identity(p, p);
  return compound() * sel;
}

RationalMatrix CoprimeFactors::N() const {
  Mat sel = Mat::Zero(p + m, m);
  sel.bottomRows(m) = Mat::Identity(m, m);
  return compound() * sel;
}

CoprimeFactors stable_coprime_from_viable(const ViablePair& vp, const ThetaFactor& theta) {
  const Index p = vp.p(), nz = vp.hidden(), m = vp.base.inputs();
  theta.validate(vp.base.domain);
  if (theta.Ax.rows() != p) throw ValidationError("ThetaFactor dimension must match p");

  Mat S = vp.pole_matrix();
  for (const auto& lam : eigenvalues(S))
    if (!is_stable(lam, vp.base.domain))
      throw NumericalError("viable pair poles are unstable at (" + std::to_string(lam.real()) +
                           "," + std::to_string(lam.imag()) +
                           "); place the pair poles first");

  const Mat& A11 = vp.base.A11;
  const Mat& A12 = vp.base.A12;
  const Mat& K = vp.K;

  // Block realization of Theta * [lambda I - W, V]. With T5 = T4^{-1} this is
  // the classical form with feedthrough [I 0]; the general T5 only rescales
  // the output map.
  CoprimeFactors cf;
  cf.p = p;
  cf.m = m;
  cf.domain = vp.base.domain;

  StateSpace& mn = cf.mn;
  mn.domain = vp.base.domain;
  mn.A = Mat::Zero(p + nz, p + nz);
  mn.A.topLeftCorner(p, p) = theta.Ax;
  mn.A.topRightCorner(p, nz) = theta.T4 * A12;
  mn.A.bottomRightCorner(nz, nz) = S;

  mn.B = Mat::Zero(p + nz, p + m);
  mn.B.topLeftCorner(p, p) = theta.Ax * theta.T4 - theta.T4 * A11 + theta.T4 * A12 * K;
  mn.B.topRightCorner(p, m) = theta.T4 * vp.base.B1;
  mn.B.bottomLeftCorner(nz, p) = -vp.w_ss.B;  // = A22 K + K A12 K - K A11 - A21
  mn.B.bottomRightCorner(nz, m) = vp.v_ss.B;

  mn.C = Mat::Zero(p, p + nz);
  mn.C.leftCols(p) = theta.T5;

  mn.D = Mat::Zero(p, p + m);
  mn.D.leftCols(p) = theta.T5 * theta.T4;

  cf.poles = eigenvalues(mn.A);
  check_rational_invertibility(cf);
  return cf;
}

CoprimeFactors nett_jacobson(const StateSpace& sys, const Mat& F, const Mat& U) {
  sys.validate();
  if (!sys.strictly_proper(0.0))
    throw ValidationError("nett_jacobson expects a strictly proper plant (D = 0)");
  const Index n = sys.order(), p = sys.outputs(), m = sys.inputs();
  if (F.rows() != n || F.cols() != p)
    throw ValidationError("F must be n x p");
  if (U.rows() != p || U.cols() != p) throw ValidationError("U must be p x p");
  require_finite(F, "F");
  require_finite(U, "U");
  Eigen::PartialPivLU<Mat> ulu(U);
  if (p > 0 && ulu.rcond() < 1.0 / kPoleCondLimit) throw ValidationError("U is singular");

  Mat Acl = sys.A - F * sys.C;
  for (const auto& lam : eigenvalues(Acl))
    if (!is_stable(lam, sys.domain))
      throw NumericalError("A - F C is unstable at (" + std::to_string(lam.real()) + "," +
                           std::to_string(lam.imag()) +
                           "): not a stable factorization over the chosen domain");

  CoprimeFactors cf;
  cf.p = p;
  cf.m = m;
  cf.domain = sys.domain;
  cf.mn.domain = sys.domain;
  cf.mn.A = Acl;
  cf.mn.B = Mat::Zero(n, p + m);
  cf.mn.B.leftCols(p) = -F;
  cf.mn.B.rightCols(m) = sys.B;
  Mat Uinv = ulu.solve(Mat::Identity(p, p));
  cf.mn.C = Uinv * sys.C;
  cf.mn.D = Mat::Zero(p, p + m);
  cf.mn.D.leftCols(p) = Uinv;
  cf.poles = eigenvalues(Acl);

  // The classical parameterization needs only stabilizability; the viable
  // pair machinery assumes controllability, so flag the weaker case.
  cf.plant_controllable = true;
  for (const auto& lam : eigenvalues(sys.A)) {
    CMat pbh(n, n + m);
    pbh.leftCols(n) = lam * CMat::Identity(n, n) - sys.A.cast<Complex>();
    pbh.rightCols(m) = sys.B.cast<Complex>();
    if (numerical_rank(pbh, 1e-9) < n) {
      cf.plant_controllable = false;
      break;
    }
  }

  check_rational_invertibility(cf);
  return cf;
}

Mat feedback_from_theta(const PartitionedRealization& base, const Mat& K, const Mat& Ax,
                        const Mat& T4) {
  base.validate();
  const Index p = base.p(), nz = base.hidden();
  if (K.rows() != nz || K.cols() != p) throw ValidationError("K must be (n-p) x p");
  if (Ax.rows() != p || Ax.cols() != p) throw ValidationError("Ax must be p x p");
  if (T4.rows() != p || T4.cols() != p) throw ValidationError("T4 must be p x p");
  Eigen::PartialPivLU<Mat> lu(T4);
  if (p > 0 && lu.rcond() < 1.0 / kPoleCondLimit) throw ValidationError("T4 is singular");

  Mat G = lu.solve(Ax * T4);  // T4^{-1} Ax T4
  Mat F(p + nz, p);
  F.topRows(p) = G - base.A11 + base.A12 * K;
  F.bottomRows(nz) = -K * G + base.A22 * K - base.A21;
  return F;
}

}  // namespace dsf
