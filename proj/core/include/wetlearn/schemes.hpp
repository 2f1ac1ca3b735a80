// SPDX-License-Identifier: Apache-2.0
//
// Feedback encoders, training covariance designers and plane extractors for
// the energy-quantization and energy-comparison learning schemes, plus the
// random-beamforming baseline.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wetlearn/accpm.hpp"
#include "wetlearn/hermitian.hpp"
#include "wetlearn/rng.hpp"

namespace wet {

enum class Scheme { Quantization, Comparison, RandomBeam };

const char* schemeName(Scheme s);

struct FeedbackWord {
  Scheme scheme = Scheme::Quantization;
  int width = 0;
  std::uint64_t payload = 0;  ///< raw bits; bit (width-1) is sent first

  // decoded views, only the one matching `scheme` is meaningful
  int levelIndex = 0;
  double level = 0.0;
  std::vector<int> signs;  ///< f_{n,1..B}, each +1 or -1
  int winner = 0;

  /// Payload as a string of '0'/'1', most significant bit first.
  std::string bits() const;
};

/// Uniform B-bit quantization of a normalized measurement. Values above 1
/// are clamped; 0 maps to the lowest level. Throws ConfigError unless
/// 1 <= B <= 62 and qBar >= 0.
FeedbackWord quantize(double qBar, int B);

/// Lower and upper bound planes implied by a quantized level. The lower
/// plane is dropped at the lowest level and the upper plane at the highest.
std::vector<CuttingPlane> quantizationPlanes(const FeedbackWord& word, const HermitianMatrix& s, int B, int mT,
                                             double power, int interval);

/// Draws an mT x mT matrix A for the quantization training design.
using MatrixSampler = std::function<ComplexMat(CounterRng&, int)>;

/// Default sampler: i.i.d. unit-variance circular complex Gaussian entries.
ComplexMat gaussianSampler(CounterRng& rng, int mT);

/// S = p A^H A with p chosen so (mT/P) tr(center S) = 1/2. Redraws A when
/// tr(S) > P or A^H A is numerically singular. Throws RetryExhausted.
HermitianMatrix designQuantizationCovariance(const HermitianMatrix& center, double power, CounterRng& rng,
                                             const MatrixSampler& sampler = gaussianSampler, int maxTries = 1000);

/// Signs comparing the newest normalized measurement with the B previous
/// ones. `history` holds Q-bar for intervals 1..n in order; n >= 2.
FeedbackWord comparisonFeedback(const std::vector<double>& history, int B);

/// Planes f_b tr(G (S_n - S_{n-b})) <= 0 for b <= min(B, n-1).
/// `covariances` ends with S_n and holds at least min(B, n-1) earlier ones.
std::vector<CuttingPlane> comparisonPlanes(const FeedbackWord& word, const std::vector<HermitianMatrix>& covariances,
                                           int interval);

/// Orthonormal basis (z^2 x (z^2-1)) of the complement of cvec(center).
Eigen::MatrixXd neutralBasis(const HermitianMatrix& center);

struct ComparisonDesign {
  HermitianMatrix s;
  HermitianMatrix delta;
  int tries = 0;
  double stepNorm = 0.0;  ///< ||p||
};

/// S = prev + cmat(V p) with V = neutralBasis(center) and ||p|| = P/5,
/// resampled until S >= 0 and tr(S) <= P. After every 100 rejected draws
/// ||p|| is halved. Throws RetryExhausted.
ComparisonDesign designComparisonCovariance(const HermitianMatrix& prev, const HermitianMatrix& center, double power,
                                            CounterRng& rng, int maxTries = 1000);

/// Number of random beams matched to N learning intervals.
int randomBeamCount(int N);
/// Bits needed to report the winning beam index.
int randomBeamBits(int N);

struct RandomBeamResult {
  ComplexVec winner;  ///< unit norm
  double gain = 0.0;  ///< linear
  int winnerIndex = 0;
  int candidates = 0;
  int feedbackBits = 0;
  FeedbackWord word;
};

/// Transmits randomBeamCount(N) random beams of power P and keeps the one
/// with the largest harvested energy.
RandomBeamResult randomBeamformingRun(const HermitianMatrix& g, int N, double power, double tm, CounterRng& rng);

/// Random beamforming evaluated at every prefix budget N = 1..maxN from a
/// single candidate stream; entry N-1 is the linear gain for budget N.
std::vector<double> randomBeamformingCurve(const HermitianMatrix& g, int maxN, double power, CounterRng& rng);

}  // namespace wet
