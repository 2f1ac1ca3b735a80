// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wetlearn/accpm.hpp"
#include "wetlearn/errors.hpp"

namespace wet {
namespace {

using testing::randomHermitian;

HermitianMatrix diag2(double a, double b) { return HermitianMatrix::diagonal((RealVec(2) << a, b).finished()); }

// Stationarity of -log det G - sum log(margin_i) on tr G = 1:
// -G^-1 + sum Sigma_i / margin_i must be a multiple of I.
double stationarityDefect(const WorkingSet& ws, const HermitianMatrix& g) {
  const int z = g.dim();
  ComplexMat m = -g.dense().inverse();
  for (const auto& p : ws.planes) m += p.sigma.dense() / -p.value(g);
  const Complex mu = m.trace() / static_cast<double>(z);
  return (m - mu * ComplexMat::Identity(z, z)).norm() / (1.0 + m.norm());
}

// Planes through random directions, each strictly satisfied by `inside`.
std::vector<CuttingPlane> planesAround(const HermitianMatrix& inside, int count, CounterRng& rng, double margin) {
  std::vector<CuttingPlane> planes;
  for (int i = 0; i < count; ++i) {
    const HermitianMatrix s = randomHermitian(rng, inside.dim());
    planes.push_back({s, traceProduct(s, inside) + margin * rng.uniform(0.1, 1.0), 2 + i, 1, 0.0});
  }
  return planes;
}

TEST(WorkingSet, InitialCenterIsScaledIdentity) {
  for (int z : {2, 4}) {
    const WorkingSet ws = initialWorkingSet(z);
    EXPECT_TRUE(ws.planes.empty());
    EXPECT_EQ(ws.center.dense(), ComplexMat::Identity(z, z) / z);
    EXPECT_NEAR(ws.center.trace(), 1.0, 1e-15);
    const CenterReport c = analyticCenter(ws);
    EXPECT_LT((c.center.dense() - ws.center.dense()).norm(), 1e-12);
  }
  EXPECT_THROW(initialWorkingSet(1), ConfigError);
}

TEST(WorkingSet, AddPlanes) {
  const WorkingSet ws = initialWorkingSet(2);
  const WorkingSet same = addPlanes(ws, {});
  EXPECT_TRUE(same.planes.empty());
  EXPECT_EQ(same.center.dense(), ws.center.dense());
  EXPECT_THROW(addPlanes(ws, {{HermitianMatrix::identity(3), 0.0, 2, 1, 0.0}}), DimensionMismatch);
}

TEST(AnalyticCenter, RedundantCutLeavesCenter) {
  const WorkingSet ws = addPlanes(initialWorkingSet(4), {{-HermitianMatrix::identity(4), 0.0, 2, 1, 0.0}});
  const CenterReport c = analyticCenter(ws);
  EXPECT_LT((c.center.dense() - ComplexMat::Identity(4, 4) / 4.0).norm(), 1e-6);
}

TEST(AnalyticCenter, MatchesGridSearchOnDiagonalSlice) {
  // tr(diag(1,-1) G) <= 0 on diag(a, 1-a): barrier -log a - log(1-a) - log(1-2a).
  const WorkingSet ws = addPlanes(initialWorkingSet(2), {{diag2(1.0, -1.0), 0.0, 2, 1, 0.0}});
  const CenterReport c = analyticCenter(ws);
  double best = std::numeric_limits<double>::infinity(), bestA = 0.0;
  const int steps = 2000000;
  for (int i = 1; i < steps; ++i) {
    const double a = 0.5 * i / steps;
    const double f = -std::log(a) - std::log(1.0 - a) - std::log(1.0 - 2.0 * a);
    if (f < best) best = f, bestA = a;
  }
  EXPECT_LT(c.center(0, 0).real(), 0.5);
  EXPECT_NEAR(c.center(0, 0).real(), bestA, 1e-4);
  EXPECT_NEAR(c.center(1, 1).real(), 1.0 - bestA, 1e-4);
  EXPECT_NEAR(std::abs(c.center(0, 1)), 0.0, 1e-10);
  EXPECT_LE(c.kktResidual, 1e-8);
}

TEST(AnalyticCenter, StationaryAndStrictlyInterior) {
  CounterRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int z = 2 + trial % 3;
    const HermitianMatrix inside =
        (HermitianMatrix::gram(testing::randomComplex(rng, z, z)) + HermitianMatrix::identity(z) * 0.1);
    const HermitianMatrix g0 = inside / inside.trace();
    const WorkingSet ws = addPlanes(initialWorkingSet(z), planesAround(g0, 3 * z * z, rng, 0.05));
    const CenterReport c = analyticCenter(ws);
    EXPECT_NEAR(c.center.trace(), 1.0, 1e-12);
    EXPECT_GT(minEigenvalue(c.center), 0.0);
    for (const auto& p : ws.planes) EXPECT_LT(p.value(c.center), 0.0);
    EXPECT_LE(c.kktResidual, 1e-8);
    EXPECT_LT(stationarityDefect(ws, c.center), 1e-7);
  }
}

TEST(AnalyticCenter, InfeasibleStartRunsPhaseOne) {
  // Both cuts exclude I/2.
  const WorkingSet ws = addPlanes(initialWorkingSet(2), {{diag2(1.0, -1.0), -0.2, 2, 1, 0.0},
                                                         {diag2(1.0, 0.0), 0.45, 2, 2, 0.0}});
  const CenterReport c = analyticCenter(ws);
  EXPECT_GT(c.phaseOneIterations, 0);
  EXPECT_TRUE(c.feasible);
  for (const auto& p : ws.planes) EXPECT_LT(p.value(c.center), 0.0);
}

TEST(AnalyticCenter, ContradictoryCutsAreEmpty) {
  const WorkingSet ws = addPlanes(initialWorkingSet(2), {{diag2(1.0, -1.0), -0.1, 2, 1, 0.0},
                                                         {diag2(-1.0, 1.0), -0.1, 3, 1, 0.0}});
  EXPECT_THROW(analyticCenter(ws), EmptyInterior);
}

TEST(Pruning, NoOpWhenUnderCap) {
  CounterRng rng(32);
  const WorkingSet ws = addPlanes(initialWorkingSet(2), planesAround(HermitianMatrix::identity(2) / 2, 3, rng, 0.2));
  const PruneReport r = pruneIrrelevant(ws, 3);
  EXPECT_EQ(r.dropped, 0);
  EXPECT_EQ(r.workingSet.planes.size(), 3U);
  EXPECT_THROW(pruneIrrelevant(ws, 0), ConfigError);
}

TEST(Pruning, EtaIsAtLeastOne) {
  // Psi contains s_i s_i^T / m_i^2, so s_i^T Psi^-1 s_i <= m_i^2.
  CounterRng rng(33);
  const HermitianMatrix c = HermitianMatrix::identity(2) / 2;
  std::vector<CuttingPlane> planes = planesAround(c, 6, rng, 1.0);
  const HermitianMatrix s = randomHermitian(rng, 2);
  planes.push_back({s, traceProduct(s, c) + 1e-3, 9, 1, 0.0});
  const std::vector<double> eta = irrelevanceMeasures(addPlanes(initialWorkingSet(2), planes));
  for (double e : eta) EXPECT_GE(e, 1.0 - 1e-9);
}

TEST(Pruning, KeepsSmallestEtaInOriginalOrder) {
  CounterRng rng(36);
  const WorkingSet ws = addPlanes(initialWorkingSet(2), planesAround(HermitianMatrix::identity(2) / 2, 9, rng, 1.0));
  const std::vector<double> eta = irrelevanceMeasures(ws);
  std::vector<double> sorted = eta;
  std::sort(sorted.begin(), sorted.end());
  const int keep = 5;
  const PruneReport r = pruneIrrelevant(ws, keep);
  EXPECT_EQ(r.dropped, 4);
  ASSERT_EQ(r.workingSet.planes.size(), static_cast<std::size_t>(keep));
  int prev = 0;
  for (const auto& p : r.workingSet.planes) {
    const auto i = static_cast<std::size_t>(p.interval - 2);
    EXPECT_LE(eta[i], sorted[keep - 1]);
    EXPECT_GT(p.interval, prev);
    prev = p.interval;
  }
}

TEST(Pruning, EtaMatchesDirectFormula) {
  CounterRng rng(34);
  const WorkingSet ws = addPlanes(initialWorkingSet(3), planesAround(HermitianMatrix::identity(3) / 3, 14, rng, 0.3));
  const std::vector<double> eta = irrelevanceMeasures(ws);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(9, 9);
  for (const auto& p : ws.planes) {
    const RealVec s = cvec(p.sigma);
    const double m = -p.value(ws.center);
    psi += s * s.transpose() / (m * m);
  }
  const Eigen::MatrixXd inv = psi.inverse();
  for (std::size_t i = 0; i < ws.planes.size(); ++i) {
    const RealVec s = cvec(ws.planes[i].sigma);
    const double ref = -ws.planes[i].value(ws.center) / std::sqrt(s.dot(inv * s));
    EXPECT_NEAR(eta[i], ref, 1e-9 * ref);
  }
}

TEST(Pruning, SingularMetricKeepsEverything) {
  // three planes cannot span a 4-dimensional coordinate space
  std::vector<CuttingPlane> planes;
  for (int i = 0; i < 3; ++i) planes.push_back({diag2(1.0, -1.0), 0.1 * (i + 1), 2 + i, 1, 0.0});
  const WorkingSet ws = addPlanes(initialWorkingSet(2), planes);
  const PruneReport r = pruneIrrelevant(ws, 2);
  EXPECT_TRUE(r.singularMetric);
  EXPECT_EQ(r.workingSet.planes.size(), 3U);
}

TEST(Relax, ConsistentPlanesNeedNoSlack) {
  CounterRng rng(35);
  const HermitianMatrix g0 = HermitianMatrix::diagonal((RealVec(4) << 0.4, 0.3, 0.2, 0.1).finished());
  const WorkingSet ws = addPlanes(initialWorkingSet(4, true), planesAround(g0, 20, rng, 0.01));
  const RelaxReport r = robustRelax(ws);
  EXPECT_FALSE(r.relaxed);
  EXPECT_EQ(r.totalSlack, 0.0);
  for (const auto& p : r.workingSet.planes) EXPECT_EQ(p.slack, 0.0);
}

TEST(Relax, ParallelContradictionCostsItsGap) {
  // a - (1 - a) <= 0 and a - (1 - a) >= eps: the cheapest repair is eps.
  const double eps = 0.05;
  const WorkingSet ws = addPlanes(initialWorkingSet(2, true), {{diag2(1.0, -1.0), 0.0, 2, 1, 0.0},
                                                               {diag2(-1.0, 1.0), -eps, 3, 1, 0.0}});
  const AccpmOptions opts;
  const RelaxReport r = robustRelax(ws, opts);
  EXPECT_TRUE(r.relaxed);
  EXPECT_NEAR(r.totalSlack, eps, 1e-7);
  double padded = 0.0;
  for (const auto& p : r.workingSet.planes) {
    EXPECT_GE(p.slack, opts.relaxPadding * (1.0 - 1e-12));
    padded += p.slack;
  }
  EXPECT_NEAR(padded, eps + 2.0 * opts.relaxPadding, 1e-7);
  const CenterReport c = analyticCenter(r.workingSet);
  for (const auto& p : r.workingSet.planes) EXPECT_LT(p.value(c.center), 0.0);
}

TEST(TraceFreeBasis, OrthonormalAndTraceless) {
  for (int z = 2; z <= 5; ++z) {
    const Eigen::MatrixXd b = traceFreeBasis(z);
    ASSERT_EQ(b.rows(), z * z);
    ASSERT_EQ(b.cols(), z * z - 1);
    EXPECT_LT((b.transpose() * b - Eigen::MatrixXd::Identity(z * z - 1, z * z - 1)).norm(), 1e-13);
    EXPECT_LT((b.transpose() * cvec(HermitianMatrix::identity(z))).norm(), 1e-13);
  }
}

}  // namespace
}  // namespace wet
