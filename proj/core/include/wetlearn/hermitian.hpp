// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace wet {

using Complex = std::complex<double>;
using RealVec = Eigen::VectorXd;
using ComplexVec = Eigen::VectorXcd;
using ComplexMat = Eigen::MatrixXcd;

/// Dense complex Hermitian matrix.
///
/// Construction from an arbitrary dense matrix checks Hermitian symmetry to
/// a relative tolerance of 1e-12 and then stores the exactly symmetrized
/// value, so the diagonal is always real and entry(a,b) == conj(entry(b,a)).
/// Instances are immutable; arithmetic returns new values.
class HermitianMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  HermitianMatrix() = default;
  explicit HermitianMatrix(int dim);

  /// Throws NotHermitian when x is not square or not Hermitian.
  static HermitianMatrix fromDense(const ComplexMat& x);
  static HermitianMatrix identity(int dim);
  static HermitianMatrix diagonal(const RealVec& d);
  /// v v^H
  static HermitianMatrix outer(const ComplexVec& v);
  /// h^H h
  static HermitianMatrix gram(const ComplexMat& h);

  int dim() const { return static_cast<int>(m_.rows()); }
  Complex operator()(int row, int col) const { return m_(row, col); }
  const ComplexMat& dense() const { return m_; }

  double trace() const;
  double frobeniusNorm() const { return m_.norm(); }
  /// v^H X v (real for Hermitian X).
  double quadraticForm(const ComplexVec& v) const;

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator-(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;
  HermitianMatrix operator/(double s) const { return *this * (1.0 / s); }
  HermitianMatrix operator-() const { return *this * -1.0; }
  friend HermitianMatrix operator*(double s, const HermitianMatrix& x) { return x * s; }

 private:
  struct Unchecked {};
  HermitianMatrix(ComplexMat m, Unchecked) : m_(std::move(m)) {}
  void symmetrize();

  ComplexMat m_;
};

/// tr(X Y) for Hermitian X, Y (always real).
double traceProduct(const HermitianMatrix& x, const HermitianMatrix& y);

/// Real isometric coordinates of a Hermitian matrix (length z^2).
///
/// Layout: the z diagonal entries; then sqrt(2) Re X(a,b) for a < b in
/// row-major pair order; then -sqrt(2) Im X(a,b) in the same order, which
/// equals j(X(a,b) - X(b,a)) / sqrt(2). With this layout
/// tr(XY) == cvec(X).dot(cvec(Y)).
RealVec cvec(const HermitianMatrix& x);

/// Inverse of cvec. Throws NonSquareLength unless v.size() is a perfect square.
HermitianMatrix cmat(const RealVec& v);

/// Side length z for a cvec of length z^2, or nullopt.
std::optional<int> cvecSide(Eigen::Index length);

struct EigenPair {
  RealVec values;      ///< non-increasing
  ComplexMat vectors;  ///< column i pairs with values(i)
  int sweeps = 0;
};

struct JacobiOptions {
  /// Stop when the off-diagonal Frobenius mass is at most tolerance * ||X||_F.
  double tolerance = 1e-12;
  int maxSweeps = 100;
};

/// Cyclic complex Jacobi eigendecomposition. Throws ConvergenceFailure when
/// maxSweeps is exhausted.
EigenPair eig(const HermitianMatrix& x, const JacobiOptions& options = {});

double minEigenvalue(const HermitianMatrix& x);

/// Lower Cholesky factor, or nullopt when a pivot drops to `pivotThreshold`
/// or below.
std::optional<ComplexMat> cholesky(const HermitianMatrix& x, double pivotThreshold = 1e-14);

/// log det X via Cholesky. Throws NotPositiveDefinite outside the PD cone.
double logdet(const HermitianMatrix& x);

struct DominantDirection {
  ComplexVec vector;
  double value = 0.0;
  /// True when the leading eigenvalue is (numerically) repeated and the
  /// returned vector was picked by the deterministic tie-break.
  bool degenerate = false;
};

/// Leading eigenvector with a fixed phase: the first component whose
/// magnitude exceeds 1e-12 is made real and positive. When several
/// eigenvalues lie within `tieTolerance * max(1, |lambda_1|)` of the
/// largest, the candidate that is lexicographically largest (real part,
/// then imaginary part, component by component) wins.
DominantDirection dominantEigenvector(const HermitianMatrix& x, double tieTolerance = 1e-9);

}  // namespace wet
