// SPDX-License-Identifier: Apache-2.0
//
// Damped Newton minimization of self-concordant barriers of the form
//
//   f(x) = objective . x - log det G(x) - sum_i log(rhs_i - rows_i . x)
//
// with the affine Hermitian map G(x) = offset + sum_k x_k directions[k].
// Variables beyond directions.size() do not enter G.
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wetlearn/hermitian.hpp"

namespace wet::detail {

struct BarrierProblem {
  HermitianMatrix offset;
  std::vector<ComplexMat> directions;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  Eigen::VectorXd objective;

  Eigen::Index size() const { return objective.size(); }
  ComplexMat matrixAt(const Eigen::VectorXd& x) const;
};

struct NewtonOptions {
  double decrementTolerance = 1e-10;  ///< on lambda^2 / 2
  double gradientTolerance = 1e-9;
  int maxIterations = 200;
  double armijo = 0.01;
  double shrink = 0.5;
  double boundaryFraction = 0.99;
};

struct NewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  /// ||grad|| divided by 1 + the summed norms of the individual barrier
  /// terms, so thin working sets with huge 1/margin terms stay comparable.
  double gradientNorm = 0.0;
  double decrement = 0.0;  ///< lambda^2 / 2 at the last iterate
  int iterations = 0;
  bool converged = false;
};

/// Value, gradient and Hessian of the log det part only.
struct LogdetTerms {
  double value = 0.0;  ///< -log det G
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// nullopt when G(x) is not positive definite.
std::optional<LogdetTerms> logdetTerms(const HermitianMatrix& offset, const std::vector<ComplexMat>& directions,
                                       const Eigen::VectorXd& x, bool withHessian = true);

/// Largest step a with G(x + a dx) still positive definite (+inf when
/// unbounded). Requires G(x) positive definite.
double psdStepLimit(const HermitianMatrix& offset, const std::vector<ComplexMat>& directions,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& dx);

/// Largest step keeping rhs - rows (x + a dx) > 0.
double linearStepLimit(const Eigen::VectorXd& margins, const Eigen::VectorXd& rowsTimesDx);

/// nullopt outside the barrier domain.
std::optional<double> barrierValue(const BarrierProblem& p, const Eigen::VectorXd& x);

/// Solves H d = -g, regularizing the diagonal when H is not numerically PD.
Eigen::VectorXd newtonDirection(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient);

/// x0 must lie strictly inside the domain.
NewtonResult minimizeBarrier(const BarrierProblem& p, Eigen::VectorXd x0, const NewtonOptions& options);

}  // namespace wet::detail
