// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/accpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "barrier.hpp"
#include "wetlearn/errors.hpp"

namespace wet {

namespace {

using detail::BarrierProblem;
using detail::NewtonOptions;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Planes expressed in trace-free coordinates: margin_i(y) = c_i - a_i . y.
struct ReducedPlanes {
  Eigen::MatrixXd a;
  Eigen::VectorXd c;
};

struct Coordinates {
  int z = 0;
  Eigen::MatrixXd basis;
  std::vector<ComplexMat> directions;
  HermitianMatrix offset;

  explicit Coordinates(int dim) : z(dim), basis(traceFreeBasis(dim)), offset(HermitianMatrix::identity(dim) / dim) {
    directions.reserve(static_cast<std::size_t>(basis.cols()));
    for (Eigen::Index k = 0; k < basis.cols(); ++k) directions.push_back(cmat(basis.col(k)).dense());
  }

  Eigen::VectorXd toReduced(const HermitianMatrix& g) const { return basis.transpose() * cvec(g); }

  HermitianMatrix fromReduced(const Eigen::VectorXd& y) const {
    RealVec v = cvec(offset) + basis * y.head(basis.cols());
    return cmat(v);
  }

  ReducedPlanes reduce(const std::vector<CuttingPlane>& planes) const {
    ReducedPlanes out;
    const auto k = static_cast<Eigen::Index>(planes.size());
    out.a.resize(k, basis.cols());
    out.c.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& p = planes[static_cast<std::size_t>(i)];
      const RealVec s = cvec(p.sigma);
      out.a.row(i) = (basis.transpose() * s).transpose();
      out.c(i) = p.gamma + p.slack - p.sigma.trace() / z;
    }
    return out;
  }
};

const Coordinates& coordinatesFor(int z) {
  thread_local std::vector<std::unique_ptr<Coordinates>> cache;
  for (const auto& c : cache) {
    if (c->z == z) return *c;
  }
  cache.push_back(std::make_unique<Coordinates>(z));
  return *cache.back();
}

bool strictlyInside(const Coordinates& coords, const ReducedPlanes& planes, const Eigen::VectorXd& y) {
  if (!cholesky(coords.fromReduced(y))) return false;
  if (planes.a.rows() == 0) return true;
  // Margins at roundoff level (neutral cuts through y) do not count.
  const Eigen::ArrayXd floor = 1e-10 * planes.c.array().abs().max(1.0);
  return ((planes.c - planes.a * y).array() > floor).all();
}

struct PhaseOneResult {
  Eigen::VectorXd y;
  int iterations = 0;
};

/// Maximizes the minimum plane margin by following the central path of
///   min s  s.t.  margin_i(y) + s > 0,  G(y) > 0
/// until s < 0. Throws EmptyInterior when the best attainable minimum
/// margin is provably below the threshold.
PhaseOneResult phaseOne(const Coordinates& coords, const ReducedPlanes& planes, const Eigen::VectorXd& y0,
                        const AccpmOptions& options) {
  const Eigen::Index d = coords.basis.cols();
  const Eigen::Index k = planes.a.rows();

  BarrierProblem p{coords.offset, coords.directions, Eigen::MatrixXd(k, d + 1), planes.c,
                   Eigen::VectorXd::Zero(d + 1)};
  p.rows.leftCols(d) = planes.a;
  p.rows.col(d).setConstant(-1.0);

  Eigen::VectorXd x(d + 1);
  x.head(d) = y0;
  const double worst = (planes.c - planes.a * y0).minCoeff();
  x(d) = std::max(0.0, -worst) + 1.0;

  NewtonOptions inner;
  inner.decrementTolerance = 1e-6;
  inner.gradientTolerance = kInf;
  inner.maxIterations = options.maxNewtonIterations;

  const double nu = static_cast<double>(coords.z + k);
  PhaseOneResult out;
  double t = 1.0;
  for (int round = 0; round < 80; ++round, t *= 8.0) {
    p.objective(d) = t;
    const auto r = detail::minimizeBarrier(p, x, inner);
    out.iterations += r.iterations;
    x = r.x;
    const double s = x(d);
    // -s is then at least half of the best attainable minimum margin.
    if (s < 0.0 && -s >= nu / t) {
      out.y = x.head(d);
      return out;
    }
    // s* >= s - nu/t, and the best minimum margin is -s*.
    if (s - nu / t > -options.emptyInteriorThreshold) break;
  }
  throw EmptyInterior("working set has no strictly feasible point");
}

}  // namespace

Eigen::MatrixXd traceFreeBasis(int z) {
  const int n = z * z;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n - 1);
  // Helmert vectors span the diagonal directions orthogonal to ones(z).
  for (int k = 1; k < z; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) b(i, k - 1) = 1.0 / norm;
    b(k, k - 1) = -static_cast<double>(k) / norm;
  }
  for (int i = z; i < n; ++i) b(i, i - 1) = 1.0;
  return b;
}

double WorkingSet::minMargin(const HermitianMatrix& g) const {
  double m = kInf;
  for (const auto& p : planes) m = std::min(m, -p.value(g));
  return m;
}

WorkingSet initialWorkingSet(int dim, bool robustMode) {
  if (dim <= 1) throw ConfigError("working set dimension must exceed 1");
  WorkingSet ws;
  ws.dim = dim;
  ws.center = HermitianMatrix::identity(dim) / dim;
  ws.robustMode = robustMode;
  return ws;
}

WorkingSet addPlanes(WorkingSet ws, const std::vector<CuttingPlane>& planes) {
  for (const auto& p : planes) {
    if (p.sigma.dim() != ws.dim) {
      throw DimensionMismatch("plane of dimension " + std::to_string(p.sigma.dim()) + " added to working set of " +
                              std::to_string(ws.dim));
    }
  }
  ws.planes.insert(ws.planes.end(), planes.begin(), planes.end());
  return ws;
}

WorkingSet withCenter(WorkingSet ws, const CenterReport& report) {
  ws.center = report.center;
  return ws;
}

CenterReport analyticCenter(const WorkingSet& ws, const AccpmOptions& options) {
  const Coordinates& coords = coordinatesFor(ws.dim);
  const ReducedPlanes planes = coords.reduce(ws.planes);

  CenterReport report;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(coords.basis.cols());
  if (ws.center.dim() == ws.dim) {
    const Eigen::VectorXd start = coords.toReduced(ws.center);
    if (cholesky(coords.fromReduced(start))) y = start;
  }
  if (!strictlyInside(coords, planes, y)) {
    const PhaseOneResult p1 = phaseOne(coords, planes, y, options);
    y = p1.y;
    report.phaseOneIterations = p1.iterations;
  }

  BarrierProblem p{coords.offset, coords.directions, planes.a, planes.c,
                   Eigen::VectorXd::Zero(coords.basis.cols())};
  NewtonOptions newton;
  newton.gradientTolerance = 0.1 * options.kktTolerance;
  newton.maxIterations = options.maxNewtonIterations;
  const auto r = detail::minimizeBarrier(p, y, newton);
  if (!r.converged && r.gradientNorm > options.kktTolerance) {
    throw MaxIterations("analytic center did not converge: residual " + std::to_string(r.gradientNorm));
  }

  report.center = coords.fromReduced(r.x);
  report.newtonIterations = r.iterations + report.phaseOneIterations;
  report.kktResidual = r.gradientNorm;
  report.minMargin = planes.a.rows() > 0 ? (planes.c - planes.a * r.x).minCoeff() : kInf;
  report.feasible = true;
  return report;
}

std::vector<double> irrelevanceMeasures(const WorkingSet& ws, const AccpmOptions& options) {
  const auto k = ws.planes.size();
  const int n = ws.dim * ws.dim;
  Eigen::MatrixXd sigmas(n, static_cast<Eigen::Index>(k));
  Eigen::VectorXd margins(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    sigmas.col(col) = cvec(ws.planes[i].sigma);
    margins(col) = -ws.planes[i].value(ws.center);
  }
  if (!(margins.array() > 0.0).all()) throw SingularMetric("center is not strictly inside every plane");

  Eigen::MatrixXd psi = sigmas * margins.cwiseAbs2().cwiseInverse().asDiagonal() * sigmas.transpose();
  if (options.augmentedPruningMetric) {
    // -log det Hessian in full cvec coordinates: tr(G^-1 F_a G^-1 F_b).
    const auto l = cholesky(ws.center);
    if (!l) throw SingularMetric("center is not positive definite");
    ComplexMat ginv = l->triangularView<Eigen::Lower>().solve(ComplexMat::Identity(ws.dim, ws.dim));
    ginv = ginv.adjoint() * ginv;
    std::vector<ComplexMat> w(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) w[static_cast<std::size_t>(a)] = ginv * cmat(RealVec::Unit(n, a)).dense();
    for (int a = 0; a < n; ++a) {
      const ComplexMat waT = w[static_cast<std::size_t>(a)].transpose();
      for (int b = 0; b < n; ++b) psi(a, b) += waT.cwiseProduct(w[static_cast<std::size_t>(b)]).sum().real();
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(psi);
  const double scale = psi.diagonal().cwiseAbs().maxCoeff();
  const auto& diag = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) || diag.minCoeff() <= 1e-12 * scale) {
    throw SingularMetric("pruning metric is singular");
  }

  std::vector<double> eta(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double q = sigmas.col(col).dot(ldlt.solve(sigmas.col(col)));
    eta[i] = margins(col) / std::sqrt(q);
  }
  return eta;
}

PruneReport pruneIrrelevant(const WorkingSet& ws, int keep, const AccpmOptions& options) {
  if (keep < 1) throw ConfigError("pruning must keep at least one plane");
  PruneReport report{ws, 0, false};
  if (ws.planes.size() <= static_cast<std::size_t>(keep)) return report;

  std::vector<double> eta;
  try {
    eta = irrelevanceMeasures(ws, options);
  } catch (const SingularMetric&) {
    report.singularMetric = true;
    return report;
  }

  std::vector<std::size_t> order(ws.planes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (eta[i] != eta[j]) return eta[i] < eta[j];
    const auto& a = ws.planes[i];
    const auto& b = ws.planes[j];
    if (a.interval != b.interval) return a.interval < b.interval;
    return a.index < b.index;
  });
  order.resize(static_cast<std::size_t>(keep));
  // Retained planes keep their original relative order.
  std::sort(order.begin(), order.end());

  report.workingSet.planes.clear();
  for (std::size_t i : order) report.workingSet.planes.push_back(ws.planes[i]);
  report.dropped = static_cast<int>(ws.planes.size()) - keep;
  return report;
}

RelaxReport robustRelax(const WorkingSet& ws, const AccpmOptions& options) {
  RelaxReport report{ws, 0.0, false, 0};
  for (auto& p : report.workingSet.planes) p.slack = 0.0;
  if (ws.planes.empty()) return report;

  const Coordinates& coords = coordinatesFor(ws.dim);
  const ReducedPlanes planes = coords.reduce(report.workingSet.planes);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(coords.basis.cols());
  if (ws.center.dim() == ws.dim && cholesky(ws.center)) y = coords.toReduced(ws.center);

  // Zero slack is optimal whenever the unrelaxed set has an interior.
  if (strictlyInside(coords, planes, y)) return report;
  try {
    // Hand the strictly feasible point on so recentering skips phase I.
    report.workingSet.center = coords.fromReduced(phaseOne(coords, planes, y, options).y);
    return report;
  } catch (const EmptyInterior&) {
  }

  // min sum t  s.t.  c_i - a_i.y + t_i > 0,  t_i > 0,  G(y) > 0,
  // by a barrier path with Schur elimination of the diagonal slack block.
  const Eigen::Index k = planes.a.rows();
  Eigen::VectorXd t = (planes.a * y - planes.c).cwiseMax(0.0).array() + 1.0;

  auto value = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& tt, double tau) -> std::optional<double> {
    if (!(tt.array() > 0.0).all()) return std::nullopt;
    const Eigen::VectorXd u = planes.c - planes.a * yy + tt;
    if (!(u.array() > 0.0).all()) return std::nullopt;
    const auto ld = detail::logdetTerms(coords.offset, coords.directions, yy, false);
    if (!ld) return std::nullopt;
    return tau * tt.sum() + ld->value - u.array().log().sum() - tt.array().log().sum();
  };

  const double nu = static_cast<double>(coords.z + 2 * k);
  constexpr double kGapTarget = 1e-10;
  for (double tau = 1.0;; tau *= 10.0) {
    const bool last = nu / tau < kGapTarget;
    for (int it = 0; it < options.maxNewtonIterations; ++it) {
      const auto ld = detail::logdetTerms(coords.offset, coords.directions, y, true);
      const Eigen::VectorXd u = planes.c - planes.a * y + t;
      const Eigen::VectorXd invU = u.cwiseInverse();
      const Eigen::VectorXd invU2 = invU.cwiseAbs2();
      const Eigen::VectorXd gy = ld->gradient + planes.a.transpose() * invU;
      const Eigen::VectorXd gt = (tau - invU.array() - t.cwiseInverse().array()).matrix();
      const Eigen::VectorXd dd = (invU2.array() + t.cwiseInverse().cwiseAbs2().array()).matrix();
      // Off-diagonal block: H_{y,t_i} = -a_i / u_i^2.
      const Eigen::VectorXd w = invU2.cwiseQuotient(dd);  // (1/u^2) / D
      Eigen::MatrixXd h = ld->hessian;
      h.noalias() += planes.a.transpose() * (invU2 - invU2.cwiseProduct(w)).asDiagonal() * planes.a;
      const Eigen::VectorXd reducedGrad = gy + planes.a.transpose() * w.cwiseProduct(gt);
      const Eigen::VectorXd dy = detail::newtonDirection(h, reducedGrad);
      // dt = D^{-1}(-g_t + (a_i . dy)/u_i^2)
      const Eigen::VectorXd dt = (-gt + invU2.cwiseProduct(planes.a * dy)).cwiseQuotient(dd);
      const double lambda2 = -(gy.dot(dy) + gt.dot(dt));
      ++report.newtonIterations;
      if (0.5 * lambda2 <= (last ? 1e-12 : 1e-6)) break;

      double limit = detail::psdStepLimit(coords.offset, coords.directions, y, dy);
      limit = std::min(limit, detail::linearStepLimit(u, planes.a * dy - dt));
      limit = std::min(limit, detail::linearStepLimit(t, -dt));
      double alpha = limit <= 1.0 ? 0.99 * limit : 1.0;
      const double current = *value(y, t, tau);
      const double slope = gy.dot(dy) + gt.dot(dt);
      bool moved = false;
      while (alpha > 1e-18) {
        const auto v = value(y + alpha * dy, t + alpha * dt, tau);
        if (v && (lambda2 < 0.04 || *v <= current + 0.01 * alpha * slope)) {
          y += alpha * dy;
          t += alpha * dt;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    if (last) break;
  }

  report.relaxed = true;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double slack = t(i) < options.slackSnap ? 0.0 : t(i);
    report.totalSlack += slack;
    report.workingSet.planes[static_cast<std::size_t>(i)].slack = slack + options.relaxPadding;
  }
  report.workingSet.center = coords.fromReduced(y);
  return report;
}

}  // namespace wet
