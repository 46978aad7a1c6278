#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsf/matrixnum.hpp"

namespace dsf {

/// Dense state-space realization L(lambda) = D + C (lambda I - A)^{-1} B.
struct StateSpace {
  Mat A, B, C, D;
  Domain domain = Domain::Continuous;

  Index order() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }

  void validate(const std::string& name = "state space") const;
  bool strictly_proper(double tol = 0.0) const { return D.size() == 0 || D.cwiseAbs().maxCoeff() <= tol; }
};

/// Output-canonical form: C = [I_p 0], D = 0, with the state matrix split at
/// row/column p. Hidden state dimension is n - p (possibly zero).
struct PartitionedRealization {
  Mat A11, A12, A21, A22, B1, B2;
  Domain domain = Domain::Continuous;

  Index p() const { return A11.rows(); }
  Index hidden() const { return A22.rows(); }
  Index order() const { return p() + hidden(); }
  Index inputs() const { return B1.cols(); }

  Mat a() const;  // reassembled full state matrix
  Mat b() const;
  StateSpace assemble() const;  // with C = [I 0], D = 0
  void validate() const;
};

/// Realization D + C (lambda E - A)^{-1} (B - lambda F) with a regular pole
/// pencil A - lambda E. F may be empty (plain descriptor form).
struct PencilRealization {
  Mat A, E, B, F, C, D;
  Domain domain = Domain::Continuous;

  Index order() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  bool has_input_pencil() const { return F.size() != 0; }

  /// Checks shapes and pencil regularity (det(A - lambda E) not identically
  /// zero, tested at order()+1 deterministic sample points).
  void validate() const;
};

struct EvalInfo {
  CMat value;
  double worst_cond = 1.0;  // largest condition estimate among internal solves
};

/// Evaluable rational matrix. Either realization-backed (state space or
/// pencil) or an expression over other rational matrices. Immutable; cheap
/// to copy (nodes are shared).
class RationalMatrix {
 public:
  RationalMatrix() = default;

  static RationalMatrix constant(const Mat& value);
  static RationalMatrix lambda_identity(Index p);  // lambda * I_p
  static RationalMatrix from_state_space(const StateSpace& ss);
  static RationalMatrix from_pencil(const PencilRealization& pr);
  /// `small` placed at block position (row, col) inside a rows x cols zero
  /// matrix. Used to assemble block-structured TFMs.
  static RationalMatrix embed(const RationalMatrix& small, Index row, Index col,
                              Index rows, Index cols);

  RationalMatrix operator+(const RationalMatrix& rhs) const;
  RationalMatrix operator-(const RationalMatrix& rhs) const;
  RationalMatrix operator*(const RationalMatrix& rhs) const;
  RationalMatrix inverse() const;
  RationalMatrix diagonal() const;  // diagonal part, zero elsewhere

  Index rows() const;
  Index cols() const;
  bool valid() const { return node_ != nullptr; }

  /// Pointwise evaluation. Throws PoleError when an internal solve has
  /// condition estimate beyond kPoleCondLimit.
  CMat eval(Complex lambda) const;
  EvalInfo eval_info(Complex lambda) const;

  /// Leaf access (nullptr when this is not a leaf of that kind).
  const StateSpace* state_space() const;
  const PencilRealization* pencil() const;
  const Mat* constant_value() const;

  /// Largest |eigenvalue| over all realization leaves; used to scale sample
  /// grids away from the pole region. 0 for constant expressions.
  double spectral_radius_bound() const;

  struct Node;  // definition is internal to the implementation

 private:
  explicit RationalMatrix(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

RationalMatrix operator*(const Mat& lhs, const RationalMatrix& rhs);
RationalMatrix operator*(const RationalMatrix& lhs, const Mat& rhs);

inline CMat evaluate(const RationalMatrix& r, Complex lambda) { return r.eval(lambda); }

struct OutputCanonical {
  PartitionedRealization part;
  Mat T;  // state transform, first p rows equal the original C
};

/// Transform so that C maps to [I_p 0]. Requires full-row-rank C and D = 0;
/// the completion rows are an orthonormal basis of the orthogonal complement
/// of rowspace(C).
OutputCanonical to_output_canonical(const StateSpace& sys);

/// The bare transform for a full-row-rank C (used where the feedthrough is
/// intentionally nonzero, e.g. normalizing compound factor realizations).
Mat output_canonical_transform(const Mat& C);

struct ConditionCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;      // smallest relative singular value seen
  Complex worst_lambda{0.0, 0.0};
};

struct MinimalityReport {
  std::vector<ConditionCheck> conditions;
  bool minimal() const;
};

/// Rank conditions for minimality of a pencil realization: full row rank of
/// [A - lambda E, B - lambda F] and [E F], full column rank of
/// [A - lambda E; C] and [E; C]. Finite-lambda conditions are sampled at the
/// generalized eigenvalues of the pole pencil plus 20 pseudo-random points.
MinimalityReport minimality_check(const PencilRealization& r);

struct McMillanDegree {
  Index degree = 0;
  Index finite = 0;
  Index infinite = 0;
  bool borderline = false;  // a rank decision fell within 10x of tolerance
};

/// Order of a numerically minimal realization (finite poles via staircase
/// truncation, infinite poles from the pencil's E-structure). Requires a
/// realization-backed input.
McMillanDegree mcmillan_degree(const RationalMatrix& r, double tol = 1e-9);
McMillanDegree mcmillan_degree(const StateSpace& ss, double tol = 1e-9);

}  // namespace dsf
