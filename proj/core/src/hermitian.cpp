// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wetlearn/errors.hpp"

namespace wet {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double offDiagonalMass(const ComplexMat& a) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (r != c) sum += std::norm(a(r, c));
    }
  }
  return std::sqrt(sum);
}

ComplexVec fixPhase(ComplexVec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > 1e-12) {
      v *= std::conj(v(i)) / mag;
      v(i) = Complex(std::abs(v(i)), 0.0);
      break;
    }
  }
  return v;
}

bool lexicographicallyGreater(const ComplexVec& a, const ComplexVec& b) {
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i).real() > b(i).real() + eps) return true;
    if (a(i).real() < b(i).real() - eps) return false;
    if (a(i).imag() > b(i).imag() + eps) return true;
    if (a(i).imag() < b(i).imag() - eps) return false;
  }
  return false;
}

}  // namespace

HermitianMatrix::HermitianMatrix(int dim) : m_(ComplexMat::Zero(dim, dim)) {}

HermitianMatrix HermitianMatrix::fromDense(const ComplexMat& x) {
  if (x.rows() != x.cols()) {
    throw NotHermitian("matrix is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  const double scale = std::max(1.0, x.norm());
  const double asym = (x - x.adjoint()).norm();
  if (asym > kSymmetryTolerance * scale) {
    throw NotHermitian("asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  HermitianMatrix h(x, Unchecked{});
  h.symmetrize();
  return h;
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  return HermitianMatrix(ComplexMat::Identity(dim, dim), Unchecked{});
}

HermitianMatrix HermitianMatrix::diagonal(const RealVec& d) {
  return HermitianMatrix(d.cast<Complex>().asDiagonal(), Unchecked{});
}

HermitianMatrix HermitianMatrix::outer(const ComplexVec& v) {
  HermitianMatrix h(v * v.adjoint(), Unchecked{});
  h.symmetrize();
  return h;
}

HermitianMatrix HermitianMatrix::gram(const ComplexMat& h) {
  HermitianMatrix g(h.adjoint() * h, Unchecked{});
  g.symmetrize();
  return g;
}

void HermitianMatrix::symmetrize() {
  const Eigen::Index n = m_.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    m_(c, c) = Complex(m_(c, c).real(), 0.0);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const Complex avg = 0.5 * (m_(r, c) + std::conj(m_(c, r)));
      m_(r, c) = avg;
      m_(c, r) = std::conj(avg);
    }
  }
}

double HermitianMatrix::trace() const { return m_.trace().real(); }

double HermitianMatrix::quadraticForm(const ComplexVec& v) const {
  if (v.size() != m_.rows()) throw DimensionMismatch("quadratic form dimension mismatch");
  return v.dot(m_ * v).real();
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw DimensionMismatch("matrix sum dimension mismatch");
  return HermitianMatrix(m_ + other.m_, Unchecked{});
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw DimensionMismatch("matrix difference dimension mismatch");
  return HermitianMatrix(m_ - other.m_, Unchecked{});
}

HermitianMatrix HermitianMatrix::operator*(double s) const { return HermitianMatrix(m_ * s, Unchecked{}); }

double traceProduct(const HermitianMatrix& x, const HermitianMatrix& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("trace product dimension mismatch");
  // tr(XY) = sum_ab X_ab Y_ba = sum_ab X_ab conj(Y_ab)
  return x.dense().cwiseProduct(y.dense().conjugate()).sum().real();
}

std::optional<int> cvecSide(Eigen::Index length) {
  if (length <= 0) return std::nullopt;
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(length))));
  if (side * side != length) return std::nullopt;
  return static_cast<int>(side);
}

RealVec cvec(const HermitianMatrix& x) {
  const int z = x.dim();
  const int pairs = z * (z - 1) / 2;
  RealVec v(z * z);
  for (int a = 0; a < z; ++a) v(a) = x(a, a).real();
  int k = 0;
  for (int a = 0; a < z; ++a) {
    for (int b = a + 1; b < z; ++b, ++k) {
      v(z + k) = kSqrt2 * x(a, b).real();
      v(z + pairs + k) = -kSqrt2 * x(a, b).imag();
    }
  }
  return v;
}

HermitianMatrix cmat(const RealVec& v) {
  const auto side = cvecSide(v.size());
  if (!side) throw NonSquareLength("cvec length " + std::to_string(v.size()) + " is not a perfect square");
  const int z = *side;
  const int pairs = z * (z - 1) / 2;
  ComplexMat m = ComplexMat::Zero(z, z);
  for (int a = 0; a < z; ++a) m(a, a) = v(a);
  int k = 0;
  for (int a = 0; a < z; ++a) {
    for (int b = a + 1; b < z; ++b, ++k) {
      const Complex entry(v(z + k) / kSqrt2, -v(z + pairs + k) / kSqrt2);
      m(a, b) = entry;
      m(b, a) = std::conj(entry);
    }
  }
  return HermitianMatrix::fromDense(m);
}

EigenPair eig(const HermitianMatrix& x, const JacobiOptions& options) {
  const int n = x.dim();
  ComplexMat a = x.dense();
  ComplexMat v = ComplexMat::Identity(n, n);
  const double threshold = options.tolerance * x.frobeniusNorm();

  int sweep = 0;
  while (offDiagonalMass(a) > threshold) {
    if (sweep == options.maxSweeps) {
      throw ConvergenceFailure("Jacobi did not converge in " + std::to_string(options.maxSweeps) + " sweeps");
    }
    ++sweep;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        // Phase D = diag(1, e^{-i phi}) makes the (p,q) entry real, then a
        // real symmetric Schur rotation zeroes it.
        const Complex phase = a(p, q) / r;  // e^{i phi}
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = D R with R = [[c, s], [-s, c]]; columns p and q of J:
        const Complex jpp = c, jpq = s;
        const Complex jqp = -s * std::conj(phase), jqq = c * std::conj(phase);
        for (int k = 0; k < n; ++k) {  // A <- A J
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (int k = 0; k < n; ++k) {  // A <- J^H A
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (int k = 0; k < n; ++k) {  // V <- V J
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });
  EigenPair out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]).real();
    out.vectors.col(i) = v.col(order[i]);
  }
  out.sweeps = sweep;
  return out;
}

double minEigenvalue(const HermitianMatrix& x) {
  const EigenPair e = eig(x);
  return e.values(e.values.size() - 1);
}

std::optional<ComplexMat> cholesky(const HermitianMatrix& x, double pivotThreshold) {
  const int n = x.dim();
  ComplexMat l = ComplexMat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double pivot = x(j, j).real();
    for (int k = 0; k < j; ++k) pivot -= std::norm(l(j, k));
    if (!(pivot > pivotThreshold)) return std::nullopt;
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (int i = j + 1; i < n; ++i) {
      Complex sum = x(i, j);
      for (int k = 0; k < j; ++k) sum -= l(i, k) * std::conj(l(j, k));
      l(i, j) = sum / d;
    }
  }
  return l;
}

double logdet(const HermitianMatrix& x) {
  const auto l = cholesky(x);
  if (!l) throw NotPositiveDefinite("matrix is not positive definite");
  double sum = 0.0;
  for (int i = 0; i < x.dim(); ++i) sum += std::log((*l)(i, i).real());
  return 2.0 * sum;
}

DominantDirection dominantEigenvector(const HermitianMatrix& x, double tieTolerance) {
  const EigenPair e = eig(x);
  const double top = e.values(0);
  const double tol = tieTolerance * std::max(1.0, std::abs(top));
  DominantDirection out;
  out.value = top;
  out.vector = fixPhase(e.vectors.col(0));
  for (Eigen::Index i = 1; i < e.values.size() && top - e.values(i) <= tol; ++i) {
    out.degenerate = true;
    ComplexVec candidate = fixPhase(e.vectors.col(i));
    if (lexicographicallyGreater(candidate, out.vector)) out.vector = std::move(candidate);
  }
  return out;
}

}  // namespace wet
