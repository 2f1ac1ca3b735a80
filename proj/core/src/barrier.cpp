// SPDX-License-Identifier: Apache-2.0
#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wetlearn/errors.hpp"

namespace wet::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// lambda^2 below which full Newton steps are taken (lambda < 0.2).
constexpr double kQuadraticRegion = 0.04;

ComplexMat affineMatrix(const HermitianMatrix& offset, const std::vector<ComplexMat>& directions,
                        const Eigen::VectorXd& x) {
  ComplexMat g = offset.dense();
  for (std::size_t k = 0; k < directions.size(); ++k) g += x(static_cast<Eigen::Index>(k)) * directions[k];
  return g;
}

}  // namespace

ComplexMat BarrierProblem::matrixAt(const Eigen::VectorXd& x) const { return affineMatrix(offset, directions, x); }

std::optional<LogdetTerms> logdetTerms(const HermitianMatrix& offset, const std::vector<ComplexMat>& directions,
                                       const Eigen::VectorXd& x, bool withHessian) {
  const ComplexMat g = affineMatrix(offset, directions, x);
  const auto l = cholesky(HermitianMatrix::fromDense(0.5 * (g + g.adjoint())));
  if (!l) return std::nullopt;

  LogdetTerms out;
  const int z = offset.dim();
  double ld = 0.0;
  for (int i = 0; i < z; ++i) ld += std::log((*l)(i, i).real());
  out.value = -2.0 * ld;

  const auto nd = static_cast<Eigen::Index>(directions.size());
  out.gradient = Eigen::VectorXd::Zero(x.size());
  if (nd == 0) {
    if (withHessian) out.hessian = Eigen::MatrixXd::Zero(x.size(), x.size());
    return out;
  }
  const auto lView = l->triangularView<Eigen::Lower>();
  ComplexMat ginv = lView.solve(ComplexMat::Identity(z, z));
  ginv = ginv.adjoint() * ginv;  // (L L^H)^{-1} = L^{-H} L^{-1}

  std::vector<ComplexMat> w(static_cast<std::size_t>(nd));
  for (Eigen::Index k = 0; k < nd; ++k) {
    const auto& e = directions[static_cast<std::size_t>(k)];
    // d/dx_k (-log det G) = -tr(G^{-1} E_k)
    out.gradient(k) = -ginv.cwiseProduct(e.transpose()).sum().real();
    if (withHessian) w[static_cast<std::size_t>(k)] = ginv * e;
  }
  if (withHessian) {
    out.hessian = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (Eigen::Index k = 0; k < nd; ++k) {
      const ComplexMat wkT = w[static_cast<std::size_t>(k)].transpose();
      for (Eigen::Index j = 0; j <= k; ++j) {
        // tr(W_k W_j) = sum_ab W_k(a,b) W_j(b,a)
        const double h = wkT.cwiseProduct(w[static_cast<std::size_t>(j)]).sum().real();
        out.hessian(k, j) = h;
        out.hessian(j, k) = h;
      }
    }
  }
  return out;
}

double psdStepLimit(const HermitianMatrix& offset, const std::vector<ComplexMat>& directions,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  if (directions.empty()) return kInf;
  const ComplexMat g = affineMatrix(offset, directions, x);
  const auto l = cholesky(HermitianMatrix::fromDense(0.5 * (g + g.adjoint())), 0.0);
  if (!l) return 0.0;
  ComplexMat d = ComplexMat::Zero(offset.dim(), offset.dim());
  for (std::size_t k = 0; k < directions.size(); ++k) d += dx(static_cast<Eigen::Index>(k)) * directions[k];
  const auto lView = l->triangularView<Eigen::Lower>();
  ComplexMat m = lView.solve(d);
  m = lView.solve(m.adjoint().eval());  // L^{-1} D L^{-H}
  const double mu = minEigenvalue(HermitianMatrix::fromDense(0.5 * (m + m.adjoint())));
  return mu < 0.0 ? -1.0 / mu : kInf;
}

double linearStepLimit(const Eigen::VectorXd& margins, const Eigen::VectorXd& rowsTimesDx) {
  double limit = kInf;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    if (rowsTimesDx(i) > 0.0) limit = std::min(limit, margins(i) / rowsTimesDx(i));
  }
  return limit;
}

std::optional<double> barrierValue(const BarrierProblem& p, const Eigen::VectorXd& x) {
  const auto ld = logdetTerms(p.offset, p.directions, x, false);
  if (!ld) return std::nullopt;
  double value = p.objective.dot(x) + ld->value;
  if (p.rows.rows() > 0) {
    const Eigen::VectorXd m = p.rhs - p.rows * x;
    if (!(m.array() > 0.0).all()) return std::nullopt;
    value -= m.array().log().sum();
  }
  return value;
}

Eigen::VectorXd newtonDirection(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
  // Symmetric diagonal equilibration, then one step of iterative refinement;
  // barrier Hessians near thin working sets span many orders of magnitude.
  const Eigen::VectorXd d = hessian.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * hessian * d.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  for (double reg = 1e-12; llt.info() != Eigen::Success; reg *= 10.0) {
    if (reg > 1e6) throw ConvergenceFailure("Newton system could not be regularized");
    Eigen::MatrixXd shifted = scaled;
    shifted.diagonal().array() += reg;
    llt.compute(shifted);
  }
  const Eigen::VectorXd rhs = -d.cwiseProduct(gradient);
  Eigen::VectorXd z = llt.solve(rhs);
  z += llt.solve(rhs - scaled * z);
  return d.cwiseProduct(z);
}

NewtonResult minimizeBarrier(const BarrierProblem& p, Eigen::VectorXd x, const NewtonOptions& options) {
  NewtonResult result;
  const bool hasRows = p.rows.rows() > 0;

  for (;;) {
    const auto ld = logdetTerms(p.offset, p.directions, x, true);
    if (!ld) throw NotPositiveDefinite("Newton iterate left the PSD domain");
    Eigen::VectorXd grad = p.objective + ld->gradient;
    Eigen::MatrixXd hess = ld->hessian;
    double value = p.objective.dot(x) + ld->value;
    double scale = 1.0 + p.objective.norm() + ld->gradient.norm();
    Eigen::VectorXd margins;
    if (hasRows) {
      margins = p.rhs - p.rows * x;
      if (!(margins.array() > 0.0).all()) throw EmptyInterior("Newton iterate violates a cutting plane");
      const Eigen::VectorXd inv = margins.cwiseInverse();
      value -= margins.array().log().sum();
      grad += p.rows.transpose() * inv;
      scale += (p.rows.rowwise().norm().array() * inv.array()).sum();
      hess.noalias() += p.rows.transpose() * inv.cwiseAbs2().asDiagonal() * p.rows;
    }

    const Eigen::VectorXd dx = newtonDirection(hess, grad);
    const double lambda2 = std::max(0.0, -grad.dot(dx));
    result.x = x;
    result.value = value;
    result.gradientNorm = grad.norm() / scale;
    result.decrement = 0.5 * lambda2;

    if (result.decrement <= options.decrementTolerance && result.gradientNorm <= options.gradientTolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= options.maxIterations) return result;
    if (lambda2 < 1e-28) {
      // Roundoff floor: no further progress is representable.
      result.converged = result.decrement <= options.decrementTolerance;
      return result;
    }

    double alpha = 1.0;
    double limit = psdStepLimit(p.offset, p.directions, x, dx);
    if (hasRows) limit = std::min(limit, linearStepLimit(margins, p.rows * dx));
    if (limit <= 1.0) alpha = options.boundaryFraction * limit;

    const double slope = grad.dot(dx);
    // Inside the quadratic convergence region of a self-concordant barrier
    // the full step is feasible and the Armijo test is dominated by
    // roundoff in f, so it is skipped.
    const bool quadratic = lambda2 < kQuadraticRegion;
    for (;;) {
      const Eigen::VectorXd trial = x + alpha * dx;
      const auto v = barrierValue(p, trial);
      if (v && (quadratic || *v <= value + options.armijo * alpha * slope)) {
        x = trial;
        break;
      }
      alpha *= options.shrink;
      if (alpha < 1e-18) {
        result.converged = result.decrement <= options.decrementTolerance;
        return result;
      }
    }
    ++result.iterations;
  }
}

}  // namespace wet::detail
