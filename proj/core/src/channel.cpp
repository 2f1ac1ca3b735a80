// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/channel.hpp"

#include <cmath>
#include <numbers>

#include "wetlearn/errors.hpp"
#include "wetlearn/rng.hpp"

namespace wet {

void ChannelParams::validate() const {
  if (mT <= 1) throw ConfigError("mT must exceed 1");
  if (mR < 1) throw ConfigError("mR must be at least 1");
  if (!(elementSpacingOverWavelength > 0.0)) throw ConfigError("element spacing must be positive");
}

ChannelRealization realizationFromChannel(const ComplexMat& h) {
  ChannelRealization out;
  out.h = h;
  out.g = HermitianMatrix::gram(h);
  const double tr = out.g.trace();
  out.gBar = out.g / tr;
  // chi* from the eigenvalues of G itself; G and gBar share eigenvectors.
  const DominantDirection dom = dominantEigenvector(out.g);
  out.lambda1 = dom.value;
  out.v1 = dom.vector;
  out.chiStar = out.g.dim() * out.lambda1 / tr;
  return out;
}

ChannelRealization generateChannel(const ChannelParams& p, std::uint64_t trial) {
  p.validate();
  CounterRng rng(p.rngSeed, trial, CounterRng::kChannel);

  const double k = fromDb(p.ricianFactorDb);
  const double losWeight = std::sqrt(k / (1.0 + k));
  const double nlosWeight = std::sqrt(1.0 / (1.0 + k));
  const double nlosVariance = std::pow(10.0, -p.pathLossDb / 10.0);
  const double losAmplitude = std::pow(10.0, -p.pathLossDb / 20.0);
  const double theta = -2.0 * std::numbers::pi * p.elementSpacingOverWavelength *
                       std::sin(p.arrivalAngleDeg * std::numbers::pi / 180.0);

  ComplexMat h(p.mR, p.mT);
  for (int r = 0; r < p.mR; ++r) {
    for (int t = 0; t < p.mT; ++t) {
      const Complex los = losAmplitude * std::polar(1.0, t * theta);
      h(r, t) = losWeight * los + nlosWeight * rng.complexGaussian(nlosVariance);
    }
  }
  return realizationFromChannel(h);
}

double harvestedEnergy(const HermitianMatrix& g, const HermitianMatrix& s, double duration) {
  if (g.dim() != s.dim()) throw DimensionMismatch("channel and covariance dimensions differ");
  return duration * traceProduct(g, s);
}

double isotropicEnergy(const HermitianMatrix& g, double power, double duration) {
  return duration * power * g.trace() / g.dim();
}

double beamformingGain(const HermitianMatrix& g, const ComplexVec& vTilde) {
  if (vTilde.size() != g.dim()) throw DimensionMismatch("beam and channel dimensions differ");
  if (std::abs(vTilde.norm() - 1.0) > 1e-10) throw NotUnitNorm("beamforming vector is not unit norm");
  return g.dim() * g.quadraticForm(vTilde) / g.trace();
}

}  // namespace wet
