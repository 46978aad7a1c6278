#pragma once

#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dsf {

using Mat     = Eigen::MatrixXd;
using CMat    = Eigen::MatrixXcd;
using Vec     = Eigen::VectorXd;
using CVec    = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index   = Eigen::Index;
using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Global default relative tolerance for reconstruction and rank decisions.
/// Identity-level checks run at 1e-8, so kernels are kept two digits tighter.
inline constexpr double kDefaultTolRel = 1e-10;

/// Condition number beyond which a linear solve is treated as a pole hit.
inline constexpr double kPoleCondLimit = 1e12;

/// Bad input: shapes, non-finite entries, malformed files. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that could not meet its numerical contract. CLI exit code 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation requested at (or numerically indistinguishable from) a pole.
class PoleError : public NumericalError {
 public:
  PoleError(Complex lambda, double cond)
      : NumericalError("evaluation hit a pole near lambda = (" +
                       std::to_string(lambda.real()) + ", " + std::to_string(lambda.imag()) +
                       "), solve condition ~" + std::to_string(cond)),
        lambda(lambda),
        cond(cond) {}
  Complex lambda;
  double cond;
};

enum class Domain { Continuous, Discrete };

inline std::string to_string(Domain d) {
  return d == Domain::Continuous ? "continuous" : "discrete";
}

/// Eigenvalue predicate for the system's stability region: open left
/// half-plane (continuous) or open unit disk (discrete).
using EigPredicate = std::function<bool(Complex)>;

inline bool is_stable(Complex lambda, Domain d) {
  return d == Domain::Continuous ? lambda.real() < 0.0 : std::abs(lambda) < 1.0;
}

inline EigPredicate stable_predicate(Domain d) {
  return [d](Complex z) { return is_stable(z, d); };
}

void require_finite(const Mat& m, const std::string& name);

/// Single deterministic randomness source. Everything that samples (test
/// points, placement retries, corpus generation) draws from one of these so
/// runs are reproducible from one seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : gen_(seed) {}

  double gaussian() { return normal_(gen_); }
  double uniform(double a, double b) { return a + (b - a) * unif_(gen_); }
  int uniform_int(int a, int b);  // inclusive both ends

  Mat gaussian_mat(Index rows, Index cols);
  Mat orthogonal(Index n);

  /// Square matrix whose spectrum lies strictly inside the stability region,
  /// with margin away from the boundary.
  Mat stable_matrix(Index n, Domain d, double margin = 0.2);

  /// Point in the disk of the given radius, bounded away from the origin.
  Complex complex_in_disk(double radius);

  /// Conjugate-closed multiset of n stable eigenvalues for the domain.
  std::vector<Complex> stable_targets(Index n, Domain d);

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace dsf
