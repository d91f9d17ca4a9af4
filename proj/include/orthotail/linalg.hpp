#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace orthotail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction validates finiteness and symmetrizes
/// away rounding-level asymmetry; anything larger is rejected.
class SymMatrix {
 public:
  /// Entry-wise asymmetry allowed before construction fails, scaled by
  /// max(1, |m_ij|, |m_ji|).
  static constexpr double kSymmetryTolerance = 1e-9;

  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix zero(Eigen::Index p) { return SymMatrix(Matrix::Zero(p, p)); }
  static SymMatrix identity(Eigen::Index p) { return SymMatrix(Matrix::Identity(p, p)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Full spectrum, eigenvalues descending, column i of `vectors` paired with
/// `values(i)`. Each column is sign-normalized: its first component with
/// magnitude above 1e-12 is positive.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

struct SmallestEigenpair {
  Vector vector;
  double value = 0.0;
};

/// Cyclic Jacobi stopping rule.
struct JacobiOptions {
  double relative_off_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Largest dimension accepted by the dense solver.
inline constexpr Eigen::Index kMaxDenseDim = 4096;

EigenDecomposition sym_eig(const SymMatrix& m, const JacobiOptions& options = {});

/// Eigenvector of the smallest eigenvalue. Near-ties (relative 1e-10 of
/// lambda_min, floored at rounding level of the spectrum) are broken by
/// taking the lexicographically smallest sign-normalized candidate.
SmallestEigenpair smallest_eigvec(const SymMatrix& m);
SmallestEigenpair smallest_eigvec(const EigenDecomposition& eig);

/// Mean of the min(k, p) largest eigenvalues.
double top_k_mean_eigval(const SymMatrix& m, std::size_t k);
double top_k_mean_eigval(const EigenDecomposition& eig, std::size_t k);

/// Exactly symmetric Gram matrix X X^T (lower triangle mirrored).
Matrix gram(const Matrix& x);

/// Flips v so that its first component with |v_i| > 1e-12 is positive.
void sign_normalize(Eigen::Ref<Vector> v);

}  // namespace orthotail
