// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "wetlearn/hermitian.hpp"

namespace wet {

/// Rician MIMO link parameters. Defaults are the reference short-range
/// setup: 4x2 link, 5 dB Rician factor, 40 dB path loss, half-wavelength
/// ULA, receiver at 30 degrees.
struct ChannelParams {
  int mT = 4;
  int mR = 2;
  double ricianFactorDb = 5.0;
  double pathLossDb = 40.0;
  double elementSpacingOverWavelength = 0.5;
  double arrivalAngleDeg = 30.0;
  std::uint64_t rngSeed = 1;

  /// Throws ConfigError when mT <= 1, mR < 1 or spacing <= 0.
  void validate() const;
};

struct ChannelRealization {
  ComplexMat h;           ///< mR x mT
  HermitianMatrix g;      ///< h^H h
  HermitianMatrix gBar;   ///< g / tr(g)
  double lambda1 = 0.0;   ///< largest eigenvalue of g
  ComplexVec v1;          ///< matching unit eigenvector
  double chiStar = 1.0;   ///< mT * lambda1 / tr(g)
};

/// Draws H = sqrt(K/(1+K)) H_los + sqrt(1/(1+K)) H_nlos. Every LOS row is
/// a * [1, e^{j theta}, ..., e^{j (mT-1) theta}] with
/// theta = -2 pi (kappa/lambda) sin(phi) and a = 10^(-pathLoss/20); NLOS
/// entries are CSCG with variance 10^(-pathLoss/10).
///
/// The realization depends only on (p.rngSeed, trial).
ChannelRealization generateChannel(const ChannelParams& p, std::uint64_t trial = 0);

/// Derived fields (gBar, lambda1, v1, chiStar) for a given channel matrix.
ChannelRealization realizationFromChannel(const ComplexMat& h);

/// duration * tr(G S), unit harvesting efficiency.
double harvestedEnergy(const HermitianMatrix& g, const HermitianMatrix& s, double duration);

/// Energy of isotropic transmission S = (power / dim) I.
double isotropicEnergy(const HermitianMatrix& g, double power, double duration);

/// mT * v^H G v / tr(G) for a unit-norm beam v. Throws NotUnitNorm.
double beamformingGain(const HermitianMatrix& g, const ComplexVec& vTilde);

inline double toDb(double ratio) { return 10.0 * std::log10(ratio); }
inline double fromDb(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace wet
