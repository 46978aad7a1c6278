#include "dsf/verify.hpp"

#include <cmath>

#include <Eigen/LU>

namespace dsf {

bool Report::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

std::string lambda_str(Complex z) {
  return "(" + std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")";
}

// Rank test of the evaluated compound [lambda I - W(l), V(l)] (or [M N]) at
// random points away from poles.
Check random_point_rank_check(const RationalMatrix& compound, Index p, Rng& rng, int nsamples,
                              double margin_tol, const std::string& name) {
  Check c{name, true, 1.0, {0, 0}, ""};
  const double radius = 2.0 * (1.0 + compound.spectral_radius_bound());
  int got = 0, budget = 50 * nsamples;
  while (got < nsamples && budget-- > 0) {
    Complex lam = rng.complex_in_disk(radius);
    CMat v;
    try {
      v = compound.eval(lam);
    } catch (const PoleError&) {
      continue;
    }
    ++got;
    double m = rank_margin(v);
    bool full = numerical_rank(v) == p;
    if (m < c.margin || !full) {
      c.margin = std::min(c.margin, m);
      c.worst_lambda = lam;
    }
    c.pass = c.pass && full;
  }
  if (got < nsamples) {
    c.pass = false;
    c.note = "sampling exhausted retry budget";
    return c;
  }
  c.pass = c.pass && c.margin > margin_tol;
  return c;
}

// Full-row-rank test of the system pencil [[A - l E, B - l F],[C, D]] at the
// given points, scaled relative to the pencil norm.
Check system_pencil_check(const PencilRealization& pr, const std::vector<Complex>& points,
                          double margin_tol, const std::string& name) {
  Check c{name, true, 1.0, {0, 0}, ""};
  const Index n = pr.order(), p = pr.C.rows(), m = pr.B.cols();
  CMat F = pr.has_input_pencil() ? CMat(pr.F.cast<Complex>()) : CMat(CMat::Zero(n, m));
  for (const auto& lam : points) {
    CMat S(n + p, n + m);
    S.topLeftCorner(n, n) = pr.A.cast<Complex>() - lam * pr.E.cast<Complex>();
    S.topRightCorner(n, m) = pr.B.cast<Complex>() - lam * F;
    S.bottomLeftCorner(p, n) = pr.C.cast<Complex>();
    S.bottomRightCorner(p, m) = pr.D.cast<Complex>();
    double mg = rank_margin(S);
    bool ok = numerical_rank(S) == n + p;
    if (mg < c.margin || (!ok && c.pass)) {
      c.margin = std::min(c.margin, mg);
      c.worst_lambda = lam;
    }
    if (!ok || mg <= margin_tol) {
      c.pass = false;
      c.note = "rank drop at lambda " + lambda_str(lam);
    }
  }
  return c;
}

// Pencil realization of [lambda I - W, V] for a pair sharing (A, C):
//   states (x, s):  [[A - lI, 0],[0, I_p]],  inputs [[-Bw, Bv],[(l0-l)I, 0]],
//   C = [Cshared, I_p],  D = [l0 I - Dw, Dv].
PencilRealization compound_pencil(const StateSpace& w, const StateSpace& v, double lambda0) {
  const Index nw = w.order(), p = w.outputs(), m = v.inputs();
  PencilRealization pr;
  pr.domain = w.domain;
  pr.A = Mat::Zero(nw + p, nw + p);
  pr.A.topLeftCorner(nw, nw) = w.A;
  pr.A.bottomRightCorner(p, p) = Mat::Identity(p, p);
  pr.E = Mat::Zero(nw + p, nw + p);
  pr.E.topLeftCorner(nw, nw) = Mat::Identity(nw, nw);
  pr.B = Mat::Zero(nw + p, p + m);
  pr.B.topLeftCorner(nw, p) = -w.B;
  pr.B.topRightCorner(nw, m) = v.B;
  pr.B.bottomLeftCorner(p, p) = lambda0 * Mat::Identity(p, p);
  pr.F = Mat::Zero(nw + p, p + m);
  pr.F.bottomLeftCorner(p, p) = Mat::Identity(p, p);
  pr.C = Mat::Zero(p, nw + p);
  pr.C.leftCols(nw) = w.C;
  pr.C.rightCols(p) = Mat::Identity(p, p);
  pr.D = Mat::Zero(p, p + m);
  pr.D.leftCols(p) = lambda0 * Mat::Identity(p, p) - w.D;
  pr.D.rightCols(m) = v.D;
  return pr;
}

}  // namespace

PencilRealization compound_factor_pencil(const ViablePair& vp, double lambda0) {
  return compound_pencil(vp.w_ss, vp.v_ss, lambda0);
}

namespace {

double pick_center(const std::vector<Complex>& poles, Rng& rng, Domain d) {
  for (int k = 0; k < 64; ++k) {
    double c = d == Domain::Continuous ? rng.uniform(-3.0, -0.5)
                                       : rng.uniform(-0.8, 0.8);
    bool clear = true;
    for (const auto& z : poles)
      if (std::abs(z - Complex(c, 0)) < 1e-3) clear = false;
    if (clear) return c;
  }
  throw NumericalError("could not pick a pencil center away from the poles");
}

}  // namespace

Report coprimeness_certificate(const ViablePair& vp, Rng& rng, int nsamples, double margin_tol) {
  Report rep;
  RationalMatrix lambda_i = RationalMatrix::lambda_identity(vp.p());
  RationalMatrix compound_w = lambda_i - vp.W;

  // Random-point rank of [lambda I - W, V] evaluated directly.
  {
    const Index p = vp.p(), m = vp.base.inputs();
    Check c{"random_point_rank", true, 1.0, {0, 0}, ""};
    const double radius = 2.0 * (1.0 + vp.plant().spectral_radius_bound() +
                                 vp.W.spectral_radius_bound());
    int got = 0, budget = 50 * nsamples;
    while (got < nsamples && budget-- > 0) {
      Complex lam = rng.complex_in_disk(radius);
      CMat row(p, p + m);
      try {
        row.leftCols(p) = compound_w.eval(lam);
        row.rightCols(m) = vp.V.eval(lam);
      } catch (const PoleError&) {
        continue;
      }
      ++got;
      double mg = rank_margin(row);
      if (mg < c.margin) {
        c.margin = mg;
        c.worst_lambda = lam;
      }
    }
    c.pass = got == nsamples && c.margin > margin_tol;
    if (got < nsamples) c.note = "sampling exhausted retry budget";
    rep.add(c);
  }

  // Candidate zeros live at the realization eigenvalues, where the compound
  // has poles; there the system pencil of the pencil realization carries the
  // rank information.
  auto poles = eigenvalues(vp.pole_matrix());
  double lambda0 = pick_center(poles, rng, vp.base.domain);
  PencilRealization pr = compound_pencil(vp.w_ss, vp.v_ss, lambda0);
  rep.add(system_pencil_check(pr, poles, margin_tol, "system_pencil_at_poles"));

  // Rank structure at infinity (conditions on the E-side blocks).
  {
    const Index n = pr.order();
    Mat ef(n, n + pr.B.cols());
    ef << pr.E, pr.F;
    Mat ec(n + pr.C.rows(), n);
    ec << pr.E, pr.C;
    Check c{"infinite_point_rank", true, 1.0, {0, 0}, ""};
    c.margin = std::min(rank_margin(ef.cast<Complex>()), rank_margin(ec.cast<Complex>()));
    c.pass = numerical_rank(ef) == n && numerical_rank(ec) == n;
    if (!c.pass) c.note = "E-side rank deficiency at infinity";
    rep.add(c);
  }
  return rep;
}

Report coprimeness_certificate(const CoprimeFactors& cf, Rng& rng, int nsamples,
                               double margin_tol) {
  Report rep;
  rep.add(random_point_rank_check(cf.compound(), cf.p, rng, nsamples, margin_tol,
                                  "random_point_rank"));

  // Candidate zeros of the proper compound: the invariant zeros of the
  // M-factor (eigenvalues of A - B_M D_M^{-1} C when D_M is invertible)
  // plus the realization poles. The rank certificate at each candidate is
  // the system matrix [[A - lambda I, B],[C, D]] keeping full row rank.
  const Index n = cf.mn.order(), p = cf.p, m = cf.m;
  Mat M0(n + p, n + p + m);
  M0.topLeftCorner(n, n) = cf.mn.A;
  M0.topRightCorner(n, p + m) = cf.mn.B;
  M0.bottomLeftCorner(p, n) = cf.mn.C;
  M0.bottomRightCorner(p, p + m) = cf.mn.D;

  Check c{"system_pencil_at_zero_candidates", true, 1.0, {0, 0}, ""};
  std::vector<Complex> candidates;
  Mat Dm = cf.mn.D.leftCols(p);
  Eigen::PartialPivLU<Mat> dlu(Dm);
  if (p > 0 && dlu.rcond() > 1.0 / kPoleCondLimit) {
    Mat Azero = cf.mn.A - cf.mn.B.leftCols(p) * dlu.solve(cf.mn.C);
    candidates = eigenvalues(Azero);
  }
  for (const auto& lam : eigenvalues(cf.mn.A)) candidates.push_back(lam);

  for (const auto& lam : candidates) {
    CMat S = M0.cast<Complex>();
    S.topLeftCorner(n, n) -= lam * CMat::Identity(n, n);
    double mg = rank_margin(S);
    bool ok = numerical_rank(S) == n + p;
    if (mg < c.margin || (!ok && c.pass)) {
      c.margin = std::min(c.margin, mg);
      c.worst_lambda = lam;
    }
    if (!ok || mg <= margin_tol) {
      c.pass = false;
      c.note = "rank drop at lambda " + lambda_str(lam);
    }
  }
  rep.add(c);
  return rep;
}

std::vector<std::pair<Index, Complex>> unstable_diagonal_zeros(const DSFPair& dsf) {
  std::vector<std::pair<Index, Complex>> out;
  const StateSpace& w = dsf.w_ss;
  const Index nw = w.order();
  for (Index i = 0; i < dsf.p(); ++i) {
    // Zeros of lambda - d_i(lambda) are the eigenvalues of the inverse
    // system's state matrix [[delta_i, c_i],[b_i, A]].
    Mat aug(nw + 1, nw + 1);
    aug(0, 0) = w.D(i, i);
    aug.block(0, 1, 1, nw) = w.C.row(i);
    aug.block(1, 0, nw, 1) = w.B.col(i);
    aug.bottomRightCorner(nw, nw) = w.A;
    for (const auto& z : eigenvalues(aug)) {
      bool unstable = dsf.domain == Domain::Continuous ? z.real() >= -1e-9
                                                       : std::abs(z) >= 1.0 - 1e-9;
      if (unstable) out.emplace_back(i, z);
    }
  }
  return out;
}

Report dsf_coprimeness_probe(const DSFPair& dsf) {
  Report rep;
  RationalMatrix L =
      (RationalMatrix::lambda_identity(dsf.p()) - RationalMatrix::from_state_space(dsf.w_ss))
          .inverse() *
      RationalMatrix::from_state_space(dsf.v_ss);

  auto zeros = unstable_diagonal_zeros(dsf);
  if (zeros.empty()) {
    rep.add({"no_unstable_diagonal_zeros", true, 1.0, {0, 0},
             "lambda I - D(lambda) has no unstable zeros"});
    return rep;
  }

  const Index p = dsf.p(), m = dsf.inputs();
  for (const auto& [row, z] : zeros) {
    Check c{"unstable_zero_row" + std::to_string(row) + "_at_" + lambda_str(z), true, 0.0, z, ""};

    // Confirm the candidate really annihilates lambda - d_row, then test
    // whether the induced factor pole cancels row-wise.
    CMat wval, vval;
    try {
      wval = RationalMatrix::from_state_space(dsf.w_ss).eval(z);
      vval = RationalMatrix::from_state_space(dsf.v_ss).eval(z);
    } catch (const PoleError&) {
      c.note = "candidate coincides with a pole of W; skipped";
      rep.add(c);
      continue;
    }
    Complex gap = z - wval(row, row);
    double scale = std::max(1.0, wval.norm());
    if (std::abs(gap) > 1e-6 * scale * (1.0 + std::abs(z))) {
      c.note = "spurious candidate (not a zero of lambda - d_i); skipped";
      rep.add(c);
      continue;
    }

    // Numerator row of [(I - Q), P] at z, scaled by (lambda - d_i): a nonzero
    // row means the factor pole at z did NOT cancel.
    CVec numerator(p + m);
    numerator.head(p) = (z * CMat::Identity(p, p) - wval).row(row).transpose();
    numerator.tail(m) = vval.row(row).transpose();
    double row_residual = numerator.norm() / std::max(scale, vval.norm());

    bool pole_of_L = false;
    try {
      (void)L.eval(z);
    } catch (const PoleError&) {
      pole_of_L = true;
    }

    if (row_residual > 1e-8 && !pole_of_L) {
      c.pass = false;
      c.margin = row_residual;
      c.note = "uncancelled unstable factor pole vanishes from L: factors are not coprime";
    } else {
      c.pass = true;
      c.margin = row_residual;
      c.note = pole_of_L ? "zero remains a pole of L (benign)" : "factor row cancels at the zero";
    }
    rep.add(c);
  }
  return rep;
}

Report identity_suite(const StateSpace& sys, const ViablePair& vp, const DSFPair& dsf,
                      const CoprimeFactors& cf, Rng& rng, int nsamples, double tol) {
  RationalMatrix L = RationalMatrix::from_state_space(sys);
  RationalMatrix lhs_wv =
      (RationalMatrix::lambda_identity(vp.p()) - vp.W).inverse() * vp.V;
  Mat ip = Mat::Identity(dsf.p(), dsf.p());
  RationalMatrix lhs_qp = (RationalMatrix::constant(ip) - dsf.Q).inverse() * dsf.P;
  RationalMatrix lhs_mn = cf.transfer();

  const double radius = 2.0 * (1.0 + L.spectral_radius_bound() + cf.compound().spectral_radius_bound());
  Check c1{"identity_L_eq_inv(lI-W)V", true, 0.0, {0, 0}, ""};
  Check c2{"identity_L_eq_inv(I-Q)P", true, 0.0, {0, 0}, ""};
  Check c3{"identity_L_eq_invM_N", true, 0.0, {0, 0}, ""};
  int got = 0, budget = 50 * nsamples;
  while (got < nsamples && budget-- > 0) {
    Complex lam = rng.complex_in_disk(radius);
    CMat l, a, b, c;
    try {
      l = L.eval(lam);
      a = lhs_wv.eval(lam);
      b = lhs_qp.eval(lam);
      c = lhs_mn.eval(lam);
    } catch (const PoleError&) {
      continue;
    }
    ++got;
    double denom = std::max(l.norm(), 1e-300);
    auto upd = [&](Check& ch, const CMat& val) {
      double err = (val - l).norm() / denom;
      if (err > ch.margin) {
        ch.margin = err;
        ch.worst_lambda = lam;
      }
    };
    upd(c1, a);
    upd(c2, b);
    upd(c3, c);
  }
  Report rep;
  if (got < nsamples) {
    rep.add({"identity_sampling", false, 0.0, {0, 0}, "sampling exhausted retry budget"});
    return rep;
  }
  c1.pass = c1.margin < tol;
  c2.pass = c2.margin < tol;
  c3.pass = c3.margin < tol;
  rep.add(c1);
  rep.add(c2);
  rep.add(c3);
  return rep;
}

}  // namespace dsf
