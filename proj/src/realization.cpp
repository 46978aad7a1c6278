#include "dsf/realization.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <lapacke.h>

namespace dsf {

namespace {

// Deterministic well-spread complex sample points on an annulus of the given
// radius (golden-angle spiral). Used where sampling must not depend on a
// caller-provided generator.
Complex spiral_point(int k, double radius) {
  constexpr double golden = 2.39996322972865332;  // golden angle, radians
  double r = radius * (0.55 + 0.45 * std::fmod(0.37 + 0.211 * k, 1.0));
  return Complex(r * std::cos(golden * (k + 1) + 0.7), r * std::sin(golden * (k + 1) + 0.7));
}

void require_shape(const Mat& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(name + " has shape " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
}

}  // namespace

void StateSpace::validate(const std::string& name) const {
  const Index n = A.rows(), m = B.cols(), p = C.rows();
  require_shape(A, n, n, name + ".A");
  require_shape(B, n, m, name + ".B");
  require_shape(C, p, n, name + ".C");
  require_shape(D, p, m, name + ".D");
  require_finite(A, name + ".A");
  require_finite(B, name + ".B");
  require_finite(C, name + ".C");
  require_finite(D, name + ".D");
}

Mat PartitionedRealization::a() const {
  Mat out(order(), order());
  out.topLeftCorner(p(), p()) = A11;
  out.topRightCorner(p(), hidden()) = A12;
  out.bottomLeftCorner(hidden(), p()) = A21;
  out.bottomRightCorner(hidden(), hidden()) = A22;
  return out;
}

Mat PartitionedRealization::b() const {
  Mat out(order(), inputs());
  out.topRows(p()) = B1;
  out.bottomRows(hidden()) = B2;
  return out;
}

StateSpace PartitionedRealization::assemble() const {
  StateSpace ss;
  ss.A = a();
  ss.B = b();
  ss.C = Mat::Zero(p(), order());
  ss.C.leftCols(p()) = Mat::Identity(p(), p());
  ss.D = Mat::Zero(p(), inputs());
  ss.domain = domain;
  return ss;
}

void PartitionedRealization::validate() const {
  const Index np = p(), nz = hidden(), m = inputs();
  require_shape(A11, np, np, "A11");
  require_shape(A12, np, nz, "A12");
  require_shape(A21, nz, np, "A21");
  require_shape(A22, nz, nz, "A22");
  require_shape(B1, np, m, "B1");
  require_shape(B2, nz, m, "B2");
  require_finite(a(), "partitioned state matrix");
  require_finite(b(), "partitioned input matrix");
}

void PencilRealization::validate() const {
  const Index n = A.rows(), m = B.cols(), p = C.rows();
  require_shape(A, n, n, "pencil A");
  require_shape(E, n, n, "pencil E");
  require_shape(B, n, m, "pencil B");
  if (has_input_pencil()) require_shape(F, n, m, "pencil F");
  require_shape(C, p, n, "pencil C");
  require_shape(D, p, m, "pencil D");
  require_finite(A, "pencil A");
  require_finite(E, "pencil E");
  require_finite(B, "pencil B");
  require_finite(C, "pencil C");
  require_finite(D, "pencil D");
  if (n == 0) return;

  double scale = std::max(1.0, A.norm() / (1.0 + E.norm()));
  bool regular = false;
  for (int k = 0; k <= n && !regular; ++k) {
    Complex lam = spiral_point(k, 2.0 * scale + 1.0);
    CMat pencil = lam * E.cast<Complex>() - A.cast<Complex>();
    Eigen::PartialPivLU<CMat> lu(pencil);
    if (lu.rcond() > 1e-13) regular = true;
  }
  if (!regular) {
    throw ValidationError("pole pencil A - lambda*E is numerically singular at " +
                          std::to_string(n + 1) + " sample points (irregular pencil)");
  }
}

// ---------------------------------------------------------------------------
// RationalMatrix expression tree
// ---------------------------------------------------------------------------

struct RationalMatrix::Node {
  enum class Kind { Constant, LambdaI, SS, Pencil, Sum, Product, Inverse, Diagonal, Embed };
  Kind kind = Kind::Constant;
  Index rows = 0, cols = 0;
  Mat constant;
  std::shared_ptr<const StateSpace> ss;
  std::shared_ptr<const PencilRealization> pr;
  std::shared_ptr<const Node> a, b;
  double sign_b = 1.0;          // Sum: a + sign_b * b
  Index at_row = 0, at_col = 0; // Embed offset
  double spectral_bound = 0.0;
};

namespace {

CMat eval_state_space(const StateSpace& s, Complex lambda, double& worst_cond) {
  const Index n = s.order();
  if (n == 0) return s.D.cast<Complex>();
  CMat M = lambda * CMat::Identity(n, n) - s.A.cast<Complex>();
  Eigen::PartialPivLU<CMat> lu(M);
  double rc = lu.rcond();
  double cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  worst_cond = std::max(worst_cond, cond);
  if (cond > kPoleCondLimit) throw PoleError(lambda, cond);
  return s.D.cast<Complex>() + s.C.cast<Complex>() * lu.solve(s.B.cast<Complex>());
}

CMat eval_pencil(const PencilRealization& s, Complex lambda, double& worst_cond) {
  const Index n = s.order();
  if (n == 0) return s.D.cast<Complex>();
  CMat M = lambda * s.E.cast<Complex>() - s.A.cast<Complex>();
  Eigen::PartialPivLU<CMat> lu(M);
  double rc = lu.rcond();
  double cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  worst_cond = std::max(worst_cond, cond);
  if (cond > kPoleCondLimit) throw PoleError(lambda, cond);
  CMat rhs = s.B.cast<Complex>();
  if (s.has_input_pencil()) rhs -= lambda * s.F.cast<Complex>();
  return s.D.cast<Complex>() + s.C.cast<Complex>() * lu.solve(rhs);
}

double pencil_spectral_bound(const PencilRealization& r) {
  const Index n = r.order();
  if (n == 0) return 0.0;
  Mat a = r.A, e = r.E;
  std::vector<double> ar(n), ai(n), be(n);
  Mat dummy(1, 1);
  lapack_int info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'N', static_cast<lapack_int>(n), a.data(),
                                  static_cast<lapack_int>(n), e.data(), static_cast<lapack_int>(n),
                                  ar.data(), ai.data(), be.data(), dummy.data(), 1, dummy.data(), 1);
  if (info != 0) return a.norm() / std::max(e.norm(), 1e-300);
  double bound = 0.0;
  for (Index i = 0; i < n; ++i) {
    double mag = std::hypot(ar[i], ai[i]);
    if (std::abs(be[i]) > 1e-12 * (mag + std::abs(be[i])))
      bound = std::max(bound, mag / std::abs(be[i]));
  }
  return bound;
}

}  // namespace

RationalMatrix RationalMatrix::constant(const Mat& value) {
  require_finite(value, "constant rational matrix");
  auto n = std::make_shared<RationalMatrix::Node>();
  n->kind = Node::Kind::Constant;
  n->rows = value.rows();
  n->cols = value.cols();
  n->constant = value;
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::lambda_identity(Index p) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::LambdaI;
  n->rows = n->cols = p;
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::from_state_space(const StateSpace& ss) {
  ss.validate();
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::SS;
  n->rows = ss.outputs();
  n->cols = ss.inputs();
  n->ss = std::make_shared<StateSpace>(ss);
  double bound = 0.0;
  for (auto e : eigenvalues(ss.A)) bound = std::max(bound, std::abs(e));
  n->spectral_bound = bound;
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::from_pencil(const PencilRealization& pr) {
  pr.validate();
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Pencil;
  n->rows = pr.C.rows();
  n->cols = pr.B.cols();
  n->pr = std::make_shared<PencilRealization>(pr);
  n->spectral_bound = pencil_spectral_bound(pr);
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::embed(const RationalMatrix& small, Index row, Index col,
                                     Index rows, Index cols) {
  if (!small.valid()) throw ValidationError("embed of empty rational matrix");
  if (row < 0 || col < 0 || row + small.rows() > rows || col + small.cols() > cols)
    throw ValidationError("embed block does not fit the target shape");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Embed;
  n->rows = rows;
  n->cols = cols;
  n->a = small.node_;
  n->at_row = row;
  n->at_col = col;
  n->spectral_bound = small.node_->spectral_bound;
  return RationalMatrix(std::move(n));
}

namespace {
void require_valid(const RationalMatrix& r, const char* who) {
  if (!r.valid()) throw ValidationError(std::string(who) + ": empty rational matrix");
}
}  // namespace

RationalMatrix RationalMatrix::operator+(const RationalMatrix& rhs) const {
  require_valid(*this, "operator+");
  require_valid(rhs, "operator+");
  if (rows() != rhs.rows() || cols() != rhs.cols())
    throw ValidationError("rational matrix sum: shape mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Sum;
  n->rows = rows();
  n->cols = cols();
  n->a = node_;
  n->b = rhs.node_;
  n->sign_b = 1.0;
  n->spectral_bound = std::max(node_->spectral_bound, rhs.node_->spectral_bound);
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::operator-(const RationalMatrix& rhs) const {
  require_valid(*this, "operator-");
  require_valid(rhs, "operator-");
  if (rows() != rhs.rows() || cols() != rhs.cols())
    throw ValidationError("rational matrix difference: shape mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Sum;
  n->rows = rows();
  n->cols = cols();
  n->a = node_;
  n->b = rhs.node_;
  n->sign_b = -1.0;
  n->spectral_bound = std::max(node_->spectral_bound, rhs.node_->spectral_bound);
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::operator*(const RationalMatrix& rhs) const {
  require_valid(*this, "operator*");
  require_valid(rhs, "operator*");
  if (cols() != rhs.rows()) throw ValidationError("rational matrix product: shape mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Product;
  n->rows = rows();
  n->cols = rhs.cols();
  n->a = node_;
  n->b = rhs.node_;
  n->spectral_bound = std::max(node_->spectral_bound, rhs.node_->spectral_bound);
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::inverse() const {
  require_valid(*this, "inverse");
  if (rows() != cols()) throw ValidationError("rational matrix inverse requires a square operand");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Inverse;
  n->rows = rows();
  n->cols = cols();
  n->a = node_;
  n->spectral_bound = node_->spectral_bound;
  return RationalMatrix(std::move(n));
}

RationalMatrix RationalMatrix::diagonal() const {
  require_valid(*this, "diagonal");
  if (rows() != cols()) throw ValidationError("diagonal extraction requires a square operand");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Diagonal;
  n->rows = rows();
  n->cols = cols();
  n->a = node_;
  n->spectral_bound = node_->spectral_bound;
  return RationalMatrix(std::move(n));
}

Index RationalMatrix::rows() const {
  require_valid(*this, "rows");
  return node_->rows;
}

Index RationalMatrix::cols() const {
  require_valid(*this, "cols");
  return node_->cols;
}

namespace {

CMat eval_node(const RationalMatrix::Node& n, Complex lambda, double& worst_cond);

CMat eval_children(const RationalMatrix::Node& n, Complex lambda, double& worst_cond) {
  using Kind = RationalMatrix::Node::Kind;
  switch (n.kind) {
    case Kind::Constant:
      return n.constant.cast<Complex>();
    case Kind::LambdaI:
      return lambda * CMat::Identity(n.rows, n.cols);
    case Kind::SS:
      return eval_state_space(*n.ss, lambda, worst_cond);
    case Kind::Pencil:
      return eval_pencil(*n.pr, lambda, worst_cond);
    case Kind::Sum:
      return eval_node(*n.a, lambda, worst_cond) + n.sign_b * eval_node(*n.b, lambda, worst_cond);
    case Kind::Product:
      return eval_node(*n.a, lambda, worst_cond) * eval_node(*n.b, lambda, worst_cond);
    case Kind::Inverse: {
      CMat v = eval_node(*n.a, lambda, worst_cond);
      Eigen::PartialPivLU<CMat> lu(v);
      double rc = lu.rcond();
      double cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
      worst_cond = std::max(worst_cond, cond);
      if (cond > kPoleCondLimit) throw PoleError(lambda, cond);
      return lu.solve(CMat::Identity(n.rows, n.cols));
    }
    case Kind::Diagonal: {
      CMat v = eval_node(*n.a, lambda, worst_cond);
      return CMat(v.diagonal().asDiagonal());
    }
    case Kind::Embed: {
      CMat v = eval_node(*n.a, lambda, worst_cond);
      CMat out = CMat::Zero(n.rows, n.cols);
      out.block(n.at_row, n.at_col, v.rows(), v.cols()) = v;
      return out;
    }
  }
  throw NumericalError("unreachable rational matrix node kind");
}

CMat eval_node(const RationalMatrix::Node& n, Complex lambda, double& worst_cond) {
  return eval_children(n, lambda, worst_cond);
}

}  // namespace

CMat RationalMatrix::eval(Complex lambda) const {
  return eval_info(lambda).value;
}

EvalInfo RationalMatrix::eval_info(Complex lambda) const {
  require_valid(*this, "eval");
  EvalInfo info;
  info.worst_cond = 1.0;
  info.value = eval_node(*node_, lambda, info.worst_cond);
  return info;
}

const StateSpace* RationalMatrix::state_space() const {
  return node_ && node_->kind == Node::Kind::SS ? node_->ss.get() : nullptr;
}

const PencilRealization* RationalMatrix::pencil() const {
  return node_ && node_->kind == Node::Kind::Pencil ? node_->pr.get() : nullptr;
}

const Mat* RationalMatrix::constant_value() const {
  return node_ && node_->kind == Node::Kind::Constant ? &node_->constant : nullptr;
}

double RationalMatrix::spectral_radius_bound() const {
  return node_ ? node_->spectral_bound : 0.0;
}

RationalMatrix operator*(const Mat& lhs, const RationalMatrix& rhs) {
  return RationalMatrix::constant(lhs) * rhs;
}

RationalMatrix operator*(const RationalMatrix& lhs, const Mat& rhs) {
  return lhs * RationalMatrix::constant(rhs);
}

// ---------------------------------------------------------------------------
// Output-canonical transform
// ---------------------------------------------------------------------------

Mat output_canonical_transform(const Mat& C) {
  const Index p = C.rows(), n = C.cols();
  if (p > n) throw ValidationError("output map has more rows than states");
  if (numerical_rank(C) != p)
    throw ValidationError("regularity violation: output map C is not full row rank");
  Eigen::HouseholderQR<Mat> qr(C.transpose());
  Mat q = qr.householderQ();
  Mat T(n, n);
  T.topRows(p) = C;
  T.bottomRows(n - p) = q.rightCols(n - p).transpose();
  return T;
}

OutputCanonical to_output_canonical(const StateSpace& sys) {
  sys.validate();
  if (!sys.strictly_proper(0.0))
    throw ValidationError("feedthrough violation: D must be zero for the output-canonical form");
  const Index n = sys.order(), p = sys.outputs();
  Mat T = output_canonical_transform(sys.C);
  Eigen::PartialPivLU<Mat> lu(T);
  Mat Tinv = lu.solve(Mat::Identity(n, n));
  Mat Anew = T * sys.A * Tinv;
  Mat Bnew = T * sys.B;

  OutputCanonical out;
  out.T = T;
  out.part.domain = sys.domain;
  out.part.A11 = Anew.topLeftCorner(p, p);
  out.part.A12 = Anew.topRightCorner(p, n - p);
  out.part.A21 = Anew.bottomLeftCorner(n - p, p);
  out.part.A22 = Anew.bottomRightCorner(n - p, n - p);
  out.part.B1 = Bnew.topRows(p);
  out.part.B2 = Bnew.bottomRows(n - p);
  return out;
}

// ---------------------------------------------------------------------------
// Minimality rank conditions
// ---------------------------------------------------------------------------

bool MinimalityReport::minimal() const {
  for (const auto& c : conditions)
    if (!c.pass) return false;
  return true;
}

namespace {

std::vector<Complex> finite_generalized_eigs(const Mat& A, const Mat& E) {
  const Index n = A.rows();
  if (n == 0) return {};
  Mat a = A, e = E;
  std::vector<double> ar(n), ai(n), be(n);
  Mat dummy(1, 1);
  lapack_int info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'N', static_cast<lapack_int>(n), a.data(),
                                  static_cast<lapack_int>(n), e.data(), static_cast<lapack_int>(n),
                                  ar.data(), ai.data(), be.data(), dummy.data(), 1, dummy.data(), 1);
  if (info != 0) throw NumericalError("dggev failed, info=" + std::to_string(info));
  std::vector<Complex> out;
  for (Index i = 0; i < n; ++i) {
    double mag = std::hypot(ar[i], ai[i]);
    if (std::abs(be[i]) > 1e-10 * (mag + std::abs(be[i]) + 1e-300))
      out.emplace_back(ar[i] / be[i], ai[i] / be[i]);
  }
  return out;
}

}  // namespace

MinimalityReport minimality_check(const PencilRealization& r) {
  r.validate();
  const Index n = r.order();
  MinimalityReport rep;

  auto finite_eigs = finite_generalized_eigs(r.A, r.E);
  double radius = 2.0 * (1.0 + pencil_spectral_bound(r));
  std::vector<Complex> samples = finite_eigs;
  for (int k = 0; k < 20; ++k) samples.push_back(spiral_point(k, radius));

  CMat Ac = r.A.cast<Complex>(), Ec = r.E.cast<Complex>(), Bc = r.B.cast<Complex>(),
       Cc = r.C.cast<Complex>();
  CMat Fc = r.has_input_pencil() ? CMat(r.F.cast<Complex>()) : CMat(CMat::Zero(r.B.rows(), r.B.cols()));

  ConditionCheck w3{"finite_controllability_rank[A-lE, B-lF]", true, 1.0, {0, 0}};
  ConditionCheck w1{"finite_observability_rank[A-lE; C]", true, 1.0, {0, 0}};
  for (const auto& lam : samples) {
    CMat pencil = Ac - lam * Ec;
    CMat rowc(n, n + r.B.cols());
    rowc << pencil, Bc - lam * Fc;
    double m_row = rank_margin(rowc);
    bool ok_row = numerical_rank(rowc) == n;
    if (m_row < w3.margin || (!ok_row && w3.pass)) {
      w3.margin = std::min(w3.margin, m_row);
      w3.worst_lambda = lam;
    }
    w3.pass = w3.pass && ok_row;

    CMat colc(n + r.C.rows(), n);
    colc << pencil, Cc;
    double m_col = rank_margin(colc);
    bool ok_col = numerical_rank(colc) == n;
    if (m_col < w1.margin || (!ok_col && w1.pass)) {
      w1.margin = std::min(w1.margin, m_col);
      w1.worst_lambda = lam;
    }
    w1.pass = w1.pass && ok_col;
  }

  Mat ef(n, n + r.B.cols());
  ef << r.E, (r.has_input_pencil() ? Mat(r.F) : Mat(r.B));
  ConditionCheck w4{"infinite_controllability_rank[E, F]", numerical_rank(ef) == n,
                    rank_margin(ef.cast<Complex>()), Complex(0, 0)};

  Mat ecm(n + r.C.rows(), n);
  ecm << r.E, r.C;
  ConditionCheck w2{"infinite_observability_rank[E; C]", numerical_rank(ecm) == n,
                    rank_margin(ecm.cast<Complex>()), Complex(0, 0)};

  rep.conditions = {w3, w4, w1, w2};
  return rep;
}

// ---------------------------------------------------------------------------
// McMillan degree
// ---------------------------------------------------------------------------

namespace {

struct StaircaseResult {
  Mat A, B, C;
  Index dim = 0;
  bool borderline = false;
};

// Orthogonal controllability staircase; returns the controllable subsystem.
StaircaseResult controllable_part(const Mat& A, const Mat& B, const Mat& C, double tol,
                                  double scale) {
  const Index n = A.rows();
  StaircaseResult res{A, B, C, 0, false};
  if (n == 0) return res;
  Index nc = 0;
  Mat Bcur = B;
  while (nc < n) {
    const Index nrem = n - nc;
    if (Bcur.cols() == 0) break;
    Eigen::JacobiSVD<Mat> svd(Bcur, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol * scale) ++rank;
    for (Index i = 0; i < sv.size(); ++i) {
      double rel = sv(i) / scale;
      if (rel > tol / 10.0 && rel < tol * 10.0) res.borderline = true;
    }
    if (rank == 0) break;
    Mat U = svd.matrixU();
    res.A.block(nc, 0, nrem, n) = U.transpose() * res.A.block(nc, 0, nrem, n);
    res.A.block(0, nc, n, nrem) = res.A.block(0, nc, n, nrem) * U;
    res.B.middleRows(nc, nrem) = U.transpose() * res.B.middleRows(nc, nrem);
    res.C.middleCols(nc, nrem) = res.C.middleCols(nc, nrem) * U;
    nc += rank;
    if (nc >= n) break;
    Bcur = res.A.block(nc, nc - rank, n - nc, rank);
  }
  res.dim = nc;
  res.A.conservativeResize(nc, nc);
  // conservativeResize keeps the top-left corner for A, top rows for B,
  // left cols for C.
  res.B = res.B.topRows(nc).eval();
  res.C = res.C.leftCols(nc).eval();
  return res;
}

McMillanDegree proper_degree(const StateSpace& ss, double tol) {
  McMillanDegree deg;
  double scale = std::max({ss.A.norm(), ss.B.norm(), ss.C.norm(), 1.0});
  StaircaseResult ctrb = controllable_part(ss.A, ss.B, ss.C, tol, scale);
  StaircaseResult obsv =
      controllable_part(ctrb.A.transpose(), ctrb.C.transpose(), ctrb.B.transpose(), tol, scale);
  deg.finite = obsv.dim;
  deg.infinite = 0;
  deg.degree = deg.finite;
  deg.borderline = ctrb.borderline || obsv.borderline;
  return deg;
}

struct PencilSplit {
  // Finite part as a proper state space; infinite part kept as coefficients.
  StateSpace finite;
  std::vector<Mat> poly_coeffs;  // coefficient of lambda^j at index j-1
  bool ok = false;
};

PencilSplit split_pencil(const PencilRealization& r) {
  const Index n = r.order();
  const Index m = r.B.cols();
  PencilSplit out;

  Mat S = r.A, T = r.E;
  Mat Q = Mat::Identity(n, n), Z = Mat::Identity(n, n);
  std::vector<double> ar(n), ai(n), be(n);
  lapack_int sdim = 0;
  lapack_int info = LAPACKE_dgges(LAPACK_COL_MAJOR, 'V', 'V', 'N', nullptr,
                                  static_cast<lapack_int>(n), S.data(), static_cast<lapack_int>(n),
                                  T.data(), static_cast<lapack_int>(n), &sdim, ar.data(), ai.data(),
                                  be.data(), Q.data(), static_cast<lapack_int>(n), Z.data(),
                                  static_cast<lapack_int>(n));
  if (info != 0) throw NumericalError("dgges failed, info=" + std::to_string(info));

  std::vector<lapack_logical> select(n);
  Index nf = 0;
  for (Index i = 0; i < n; ++i) {
    double mag = std::hypot(ar[i], ai[i]);
    bool finite = std::abs(be[i]) > 1e-10 * (mag + std::abs(be[i]) + 1e-300);
    select[i] = finite ? 1 : 0;
    if (finite) ++nf;
  }
  if (nf > 0 && nf < n) {
    lapack_int mfound = 0;
    double pl = 0, prr = 0, dif[2] = {0, 0};
    lapack_int lwork = std::max<lapack_int>(static_cast<lapack_int>(4 * n + 16), 32) * 2;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    lapack_int liwork = std::max<lapack_int>(static_cast<lapack_int>(n + 6), 8) * 2;
    std::vector<lapack_int> iwork(static_cast<std::size_t>(liwork));
    info = LAPACKE_dtgsen_work(LAPACK_COL_MAJOR, 0, 1, 1, select.data(),
                               static_cast<lapack_int>(n), S.data(), static_cast<lapack_int>(n),
                               T.data(), static_cast<lapack_int>(n), ar.data(), ai.data(),
                               be.data(), Q.data(), static_cast<lapack_int>(n), Z.data(),
                               static_cast<lapack_int>(n), &mfound, &pl, &prr, dif, work.data(),
                               lwork, iwork.data(), liwork);
    if (info != 0) throw NumericalError("dtgsen failed, info=" + std::to_string(info));
    nf = mfound;
  }
  const Index ni = n - nf;

  Mat Bq = Q.transpose() * r.B;
  Mat Fq = r.has_input_pencil() ? Mat(Q.transpose() * r.F) : Mat(Mat::Zero(n, m));
  Mat Cz = r.C * Z;

  Mat Sff = S.topLeftCorner(nf, nf), Sfi = S.topRightCorner(nf, ni),
      Sii = S.bottomRightCorner(ni, ni);
  Mat Tff = T.topLeftCorner(nf, nf), Tfi = T.topRightCorner(nf, ni),
      Tii = T.bottomRightCorner(ni, ni);
  Mat B1 = Bq.topRows(nf), B2 = Bq.bottomRows(ni);
  Mat F1 = Fq.topRows(nf), F2 = Fq.bottomRows(ni);
  Mat C1 = Cz.leftCols(nf), C2 = Cz.rightCols(ni);

  if (nf > 0 && ni > 0) {
    // Decouple with [[I, L],[0, I]] * (S,T) * [[I, R],[0, I]]:
    //   Sff R + L Sii = -Sfi,  Tff R + L Tii = -Tfi   (coupled Sylvester).
    const Index nl = nf * ni;
    Mat big = Mat::Zero(2 * nl, 2 * nl);
    Vec rhs(2 * nl);
    auto kron_in = [&](Index row0, Index col0, const Mat& left_of_R_or_L, bool right_side) {
      // Fills the Kronecker block: if right_side, block = (X^T kron I_nf)
      // acting on vec(L); else (I_ni kron X) acting on vec(R).
      if (!right_side) {
        for (Index k = 0; k < ni; ++k)
          big.block(row0 + k * nf, col0 + k * nf, nf, nf) = left_of_R_or_L;
      } else {
        for (Index kc = 0; kc < ni; ++kc)
          for (Index kr = 0; kr < ni; ++kr)
            big.block(row0 + kc * nf, col0 + kr * nf, nf, nf) =
                left_of_R_or_L(kr, kc) * Mat::Identity(nf, nf);
      }
    };
    kron_in(0, 0, Sff, false);
    kron_in(0, nl, Sii, true);
    kron_in(nl, 0, Tff, false);
    kron_in(nl, nl, Tii, true);
    rhs.head(nl) = -Eigen::Map<const Vec>(Sfi.data(), nl);
    rhs.tail(nl) = -Eigen::Map<const Vec>(Tfi.data(), nl);
    Eigen::PartialPivLU<Mat> lu(big);
    if (lu.rcond() < 1e-14)
      throw NumericalError("pencil finite/infinite decoupling is numerically singular");
    Vec sol = lu.solve(rhs);
    Mat R = Eigen::Map<Mat>(sol.data(), nf, ni);
    Mat L = Eigen::Map<Mat>(sol.data() + nl, nf, ni);
    B1 += L * B2;
    F1 += L * F2;
    C2 = C1 * R + C2;
  }

  if (nf > 0) {
    Eigen::PartialPivLU<Mat> lut(Tff);
    if (lut.rcond() < 1e-14)
      throw NumericalError("finite pencil block has singular E-part after splitting");
    Mat TinvF = lut.solve(F1);
    out.finite.A = lut.solve(Sff);
    out.finite.B = lut.solve(B1 - Sff * TinvF);
    out.finite.C = C1;
    out.finite.D = Mat::Zero(r.C.rows(), m);
    out.finite.domain = r.domain;
  } else {
    out.finite = StateSpace{Mat(0, 0), Mat(0, m), Mat::Zero(r.C.rows(), 0),
                            Mat::Zero(r.C.rows(), m), r.domain};
  }

  if (ni > 0) {
    Eigen::PartialPivLU<Mat> lus(Sii);
    if (lus.rcond() < 1e-14)
      throw NumericalError("infinite pencil block has singular A-part (irregular pencil?)");
    Mat N = lus.solve(Tii);
    Mat SinvB = lus.solve(B2);
    Mat SinvF = lus.solve(F2);
    // lambda^j coefficient for j >= 1:  -C2 N^j Sii^{-1} B2 + C2 N^{j-1} Sii^{-1} F2.
    Mat Npow = Mat::Identity(ni, ni);  // N^{j-1}
    for (Index j = 1; j <= ni; ++j) {
      Mat coeff = -C2 * (N * Npow) * SinvB + C2 * Npow * SinvF;
      out.poly_coeffs.push_back(coeff);
      Npow = N * Npow;
    }
  }
  out.ok = true;
  return out;
}

Index hankel_rank(const std::vector<Mat>& coeffs, double tol, bool& borderline) {
  if (coeffs.empty()) return 0;
  const Index d = static_cast<Index>(coeffs.size());
  const Index pr = coeffs[0].rows(), pc = coeffs[0].cols();
  Mat H = Mat::Zero(d * pr, d * pc);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Index k = i + j;  // block (i,j) holds coefficient index i+j (0-based -> lambda^{i+j+1})
      if (k < d) H.block(i * pr, j * pc, pr, pc) = coeffs[static_cast<std::size_t>(k)];
    }
  if (H.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(H);
  const auto& sv = svd.singularValues();
  double smax = std::max(sv.size() > 0 ? sv(0) : 0.0, 1e-300);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    double rel = sv(i) / smax;
    if (rel > tol) ++rank;
    if (rel > tol / 10.0 && rel < tol * 10.0) borderline = true;
  }
  // A zero Hankel matrix means no polynomial part at all.
  if (smax <= 1e-300) return 0;
  return rank;
}

}  // namespace

McMillanDegree mcmillan_degree(const StateSpace& ss, double tol) {
  ss.validate();
  return proper_degree(ss, tol);
}

McMillanDegree mcmillan_degree(const RationalMatrix& r, double tol) {
  if (!r.valid()) throw ValidationError("mcmillan_degree of empty rational matrix");
  if (r.constant_value() != nullptr) return McMillanDegree{0, 0, 0, false};
  if (const StateSpace* ss = r.state_space()) return proper_degree(*ss, tol);

  PencilRealization pr;
  if (const PencilRealization* leaf = r.pencil()) {
    pr = *leaf;
  } else if (r.rows() == r.cols()) {
    // lambda * I_p has an exact pencil realization with E = 0.
    CMat probe0 = r.eval(Complex(0.337, 0.0));
    CMat probe1 = r.eval(Complex(1.731, 0.0));
    bool lambda_like = (probe0 - 0.337 * CMat::Identity(r.rows(), r.cols())).norm() < 1e-12 &&
                       (probe1 - 1.731 * CMat::Identity(r.rows(), r.cols())).norm() < 1e-12;
    if (!lambda_like)
      throw ValidationError("mcmillan_degree requires a realization-backed rational matrix");
    const Index p = r.rows();
    pr.A = Mat::Identity(p, p);
    pr.E = Mat::Zero(p, p);
    pr.B = Mat::Zero(p, p);
    pr.F = -Mat::Identity(p, p);
    pr.C = Mat::Identity(p, p);
    pr.D = Mat::Zero(p, p);
  } else {
    throw ValidationError("mcmillan_degree requires a realization-backed rational matrix");
  }

  PencilSplit split = split_pencil(pr);
  McMillanDegree deg;
  McMillanDegree fin = proper_degree(split.finite, tol);
  deg.finite = fin.finite;
  deg.borderline = fin.borderline;
  deg.infinite = hankel_rank(split.poly_coeffs, tol, deg.borderline);
  deg.degree = deg.finite + deg.infinite;
  return deg;
}

}  // namespace dsf
