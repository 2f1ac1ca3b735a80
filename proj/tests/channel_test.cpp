// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wetlearn/channel.hpp"
#include "wetlearn/errors.hpp"

namespace wet {
namespace {

TEST(Channel, LineOfSightLimit) {
  ChannelParams p;
  p.ricianFactorDb = 300.0;
  const ChannelRealization r = generateChannel(p, 3);
  const double theta = -2.0 * std::numbers::pi * 0.5 * std::sin(30.0 * std::numbers::pi / 180.0);
  for (int row = 0; row < p.mR; ++row) {
    for (int k = 0; k < p.mT; ++k) {
      const Complex los = 1e-2 * std::polar(1.0, theta * k);
      EXPECT_NEAR(std::abs(r.h(row, k) - los), 0.0, 1e-12);
    }
  }
  EXPECT_NEAR(r.chiStar, p.mT, 1e-9);
  const EigenPair e = eig(r.gBar);
  EXPECT_NEAR(e.values(1), 0.0, 1e-12);
}

TEST(Channel, AverageAttenuationIsPathLoss) {
  ChannelParams p;
  double sum = 0.0;
  const int count = 10000;
  for (int t = 0; t < count; ++t) {
    sum += generateChannel(p, static_cast<std::uint64_t>(t)).h.squaredNorm() / (p.mT * p.mR);
  }
  EXPECT_NEAR(sum / count, 1e-4, 1e-5);
}

TEST(Channel, DeterministicPerSeedAndTrial) {
  ChannelParams p;
  p.rngSeed = 42;
  EXPECT_EQ(generateChannel(p, 7).h, generateChannel(p, 7).h);
  EXPECT_NE(generateChannel(p, 7).h, generateChannel(p, 8).h);
  ChannelParams q = p;
  q.rngSeed = 43;
  EXPECT_NE(generateChannel(p, 7).h, generateChannel(q, 7).h);
}

TEST(Channel, DerivedFields) {
  ChannelParams p;
  const ChannelRealization r = generateChannel(p, 1);
  EXPECT_NEAR(r.gBar.trace(), 1.0, 1e-14);
  EXPECT_NEAR(r.v1.norm(), 1.0, 1e-12);
  EXPECT_NEAR(r.g.quadraticForm(r.v1), r.lambda1, 1e-12 * r.lambda1);
  EXPECT_NEAR(r.chiStar, p.mT * r.lambda1 / r.g.trace(), 1e-12);
  EXPECT_GE(r.chiStar, 1.0);
  EXPECT_LE(r.chiStar, p.mT + 1e-12);
}

TEST(Channel, RejectsBadParameters) {
  ChannelParams p;
  p.mT = 1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.mR = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.elementSpacingOverWavelength = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Energy, HarvestedEnergy) {
  const double power = 2.0, t = 3.0;
  EXPECT_NEAR(harvestedEnergy(HermitianMatrix::identity(4), HermitianMatrix::identity(4) * (power / 4), t), t * power,
              1e-14);
  const ChannelRealization r = generateChannel({}, 5);
  EXPECT_NEAR(harvestedEnergy(r.g, HermitianMatrix::outer(r.v1) * power, t), t * power * r.lambda1,
              1e-12 * r.lambda1);
  EXPECT_EQ(harvestedEnergy(r.g, HermitianMatrix(4), t), 0.0);
}

TEST(Energy, IsotropicBaseline) {
  EXPECT_NEAR(isotropicEnergy(HermitianMatrix::identity(4), 1.0, 1.0), 1.0, 1e-15);
  // rank-1 G reaches the full array gain, a scaled identity none.
  ComplexVec u = ComplexVec::Zero(4);
  u(2) = 2.0;
  const HermitianMatrix rankOne = HermitianMatrix::outer(u);
  const double qStar = harvestedEnergy(rankOne, HermitianMatrix::outer(u / u.norm()), 1.0);
  EXPECT_NEAR(qStar / isotropicEnergy(rankOne, 1.0, 1.0), 4.0, 1e-12);
  const HermitianMatrix flat = HermitianMatrix::identity(4) * 3.0;
  EXPECT_NEAR(realizationFromChannel(ComplexMat::Identity(4, 4) * std::sqrt(3.0)).chiStar, 1.0, 1e-12);
  EXPECT_NEAR(harvestedEnergy(flat, HermitianMatrix::outer(u / u.norm()), 1.0) / isotropicEnergy(flat, 1.0, 1.0), 1.0,
              1e-12);
}

TEST(Gain, DominantBeamGivesChiStar) {
  const ChannelRealization r = generateChannel({}, 9);
  EXPECT_NEAR(beamformingGain(r.g, r.v1), r.chiStar, 1e-12);
}

TEST(Gain, OrthogonalBeamGivesZero) {
  ComplexVec u(4);
  u << 1.0, Complex(0, 1), 0.0, 0.0;
  ComplexVec w(4);
  w << Complex(0, 1), 1.0, 0.0, 0.0;
  ASSERT_NEAR(std::abs(u.dot(w)), 0.0, 1e-15);
  EXPECT_NEAR(beamformingGain(HermitianMatrix::outer(u), w / w.norm()), 0.0, 1e-15);
}

TEST(Gain, MatchesNaiveQuadraticForm) {
  CounterRng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const ChannelRealization r = generateChannel({}, static_cast<std::uint64_t>(trial));
    const ComplexVec v = testing::randomUnit(rng, 4);
    Complex q = 0.0;
    double tr = 0.0;
    for (int a = 0; a < 4; ++a) {
      tr += r.g(a, a).real();
      for (int b = 0; b < 4; ++b) q += std::conj(v(a)) * r.g(a, b) * v(b);
    }
    EXPECT_NEAR(beamformingGain(r.g, v), 4.0 * q.real() / tr, 1e-12);
  }
}

TEST(Gain, RejectsNonUnitBeam) {
  EXPECT_THROW(beamformingGain(HermitianMatrix::identity(2), ComplexVec::Ones(2)), NotUnitNorm);
}

TEST(Channel, EnsembleChiStarIsLineOfSightDominated) {
  double sumDb = 0.0;
  for (int t = 0; t < 500; ++t) sumDb += toDb(generateChannel({}, static_cast<std::uint64_t>(t)).chiStar);
  EXPECT_GT(sumDb / 500.0, 4.0);
}

}  // namespace
}  // namespace wet
