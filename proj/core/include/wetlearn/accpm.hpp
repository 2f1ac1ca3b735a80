// SPDX-License-Identifier: Apache-2.0
//
// Localization of a unit-trace PSD matrix by the analytic center cutting
// plane method. The working set is
//
//   { G : G >= 0, tr G = 1, tr(Sigma_i G) - gamma_i <= t_i for every plane }
//
// and its analytic center minimizes
//
//   -log det G - sum_i log(gamma_i + t_i - tr(Sigma_i G)).
//
// Internally the trace constraint is eliminated with a fixed orthonormal
// basis of the trace-free subspace in cvec coordinates:
// G = I/z + cmat(B y).
#pragma once

#include <optional>
#include <vector>

#include "wetlearn/hermitian.hpp"

namespace wet {

/// Half-space tr(sigma G) - gamma <= slack.
struct CuttingPlane {
  HermitianMatrix sigma;
  double gamma = 0.0;
  int interval = 0;  ///< feedback interval that produced the plane (>= 2)
  int index = 1;     ///< position within that interval (>= 1)
  double slack = 0.0;

  /// tr(sigma G) - gamma - slack; nonpositive inside the half-space.
  double value(const HermitianMatrix& g) const { return traceProduct(sigma, g) - gamma - slack; }
};

struct WorkingSet {
  int dim = 0;
  std::vector<CuttingPlane> planes;
  HermitianMatrix center;  ///< current analytic center
  bool robustMode = false;

  /// Smallest gamma + slack - tr(sigma G) over all planes (+inf when empty).
  double minMargin(const HermitianMatrix& g) const;
};

struct CenterReport {
  HermitianMatrix center;
  int newtonIterations = 0;   ///< centering plus any feasibility iterations
  int phaseOneIterations = 0;
  double kktResidual = 0.0;   ///< scaled trace-free barrier gradient norm
  double minMargin = 0.0;
  bool feasible = false;
};

struct AccpmOptions {
  double kktTolerance = 1e-8;
  int maxNewtonIterations = 200;
  /// Best attainable minimum margin below which the interior is declared empty.
  double emptyInteriorThreshold = 1e-12;
  /// Include the -log det Hessian in the pruning metric.
  bool augmentedPruningMetric = false;
  /// Interior padding added to every slack once the robust relaxation is
  /// active, so the relaxed set keeps a nonempty interior.
  double relaxPadding = 1e-6;
  /// Slacks below this are reported as exactly zero.
  double slackSnap = 1e-8;
};

/// The simplex { G >= 0, tr G = 1 } with center I/dim. Throws ConfigError
/// when dim <= 1.
WorkingSet initialWorkingSet(int dim, bool robustMode = false);

/// Appends planes; the center is left untouched. Throws DimensionMismatch.
WorkingSet addPlanes(WorkingSet ws, const std::vector<CuttingPlane>& planes);

/// Analytic center of the working set. Starts from ws.center and runs a
/// phase-I (maximize the minimum margin) when that point is not strictly
/// feasible. Throws EmptyInterior or MaxIterations.
CenterReport analyticCenter(const WorkingSet& ws, const AccpmOptions& options = {});

/// Copy of ws with its center replaced.
WorkingSet withCenter(WorkingSet ws, const CenterReport& report);

/// Irrelevance measure of every plane at ws.center:
///   margin_i / sqrt(cvec(Sigma_i)^T Psi^{-1} cvec(Sigma_i)),
///   Psi = sum_i cvec(Sigma_i) cvec(Sigma_i)^T / margin_i^2.
/// Throws SingularMetric when Psi cannot be inverted.
std::vector<double> irrelevanceMeasures(const WorkingSet& ws, const AccpmOptions& options = {});

struct PruneReport {
  WorkingSet workingSet;
  int dropped = 0;
  bool singularMetric = false;  ///< metric was singular; every plane kept
};

/// Keeps the `keep` planes with the smallest irrelevance measure (ties:
/// older interval, then lower index, kept first). The caller recenters.
PruneReport pruneIrrelevant(const WorkingSet& ws, int keep, const AccpmOptions& options = {});

struct RelaxReport {
  WorkingSet workingSet;
  double totalSlack = 0.0;  ///< optimal sum of slacks (before padding)
  bool relaxed = false;     ///< unrelaxed set had an empty interior
  int newtonIterations = 0;
};

/// Chooses slacks t >= 0 of minimum total sum such that the relaxed set
/// is nonempty, then pads them by options.relaxPadding when any slack is
/// needed. Consistent planes receive zero slack.
RelaxReport robustRelax(const WorkingSet& ws, const AccpmOptions& options = {});

/// Fixed orthonormal basis (z^2 x (z^2 - 1)) of the cvec images of
/// trace-free Hermitian matrices.
Eigen::MatrixXd traceFreeBasis(int z);

}  // namespace wet
