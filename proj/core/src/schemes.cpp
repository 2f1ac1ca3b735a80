// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wetlearn/channel.hpp"
#include "wetlearn/errors.hpp"

namespace wet {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr int kShrinkEvery = 100;

ComplexVec randomBeam(int mT, double power, CounterRng& rng) {
  ComplexVec w(mT);
  for (int i = 0; i < mT; ++i) w(i) = rng.complexGaussian();
  return w * (std::sqrt(power) / w.norm());
}

}  // namespace

const char* schemeName(Scheme s) {
  switch (s) {
    case Scheme::Quantization:
      return "quantization";
    case Scheme::Comparison:
      return "comparison";
    case Scheme::RandomBeam:
      return "random";
  }
  return "unknown";
}

std::string FeedbackWord::bits() const {
  std::string out(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if ((payload >> (width - 1 - i)) & 1U) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

FeedbackWord quantize(double qBar, int B) {
  if (B < 1 || B > 62) throw ConfigError("quantizer width must be in [1, 62], got " + std::to_string(B));
  if (!(qBar >= 0.0)) throw ConfigError("normalized measurement must be nonnegative");
  const double levels = std::ldexp(1.0, B);
  const double clamped = std::min(qBar, 1.0);
  // ceil(2^B q)/2^B - 2^-(B+1) is the midpoint of cell ceil(2^B q) - 1.
  const double cell = std::ceil(levels * clamped) - 1.0;
  const auto index = static_cast<std::uint64_t>(std::clamp(cell, 0.0, levels - 1.0));

  FeedbackWord w;
  w.scheme = Scheme::Quantization;
  w.width = B;
  w.payload = index;
  w.levelIndex = static_cast<int>(std::min<std::uint64_t>(index, std::numeric_limits<int>::max()));
  w.level = (static_cast<double>(index) + 0.5) / levels;
  return w;
}

std::vector<CuttingPlane> quantizationPlanes(const FeedbackWord& word, const HermitianMatrix& s, int B, int mT,
                                             double power, int interval) {
  const double half = std::ldexp(1.0, -(B + 1));
  const std::uint64_t top = (std::uint64_t{1} << B) - 1;
  const HermitianMatrix sigma = s * (static_cast<double>(mT) / power);
  std::vector<CuttingPlane> planes;
  int c = 1;
  if (word.payload != 0) planes.push_back({-sigma, -word.level + half, interval, c++, 0.0});
  if (word.payload != top) planes.push_back({sigma, word.level + half, interval, c++, 0.0});
  return planes;
}

ComplexMat gaussianSampler(CounterRng& rng, int mT) {
  ComplexMat a(mT, mT);
  for (int c = 0; c < mT; ++c) {
    for (int r = 0; r < mT; ++r) a(r, c) = rng.complexGaussian();
  }
  return a;
}

HermitianMatrix designQuantizationCovariance(const HermitianMatrix& center, double power, CounterRng& rng,
                                             const MatrixSampler& sampler, int maxTries) {
  const int m = center.dim();
  for (int attempt = 0; attempt < maxTries; ++attempt) {
    const HermitianMatrix aha = HermitianMatrix::gram(sampler(rng, m));
    const double tr = aha.trace();
    if (!(tr > 0.0) || minEigenvalue(aha) <= 1e-12 * tr) continue;
    const double p = power / (2.0 * m * traceProduct(center, aha));
    const HermitianMatrix s = aha * p;
    if (s.trace() <= power) return s;
  }
  throw RetryExhausted("no admissible quantization training covariance after " + std::to_string(maxTries) +
                       " draws");
}

FeedbackWord comparisonFeedback(const std::vector<double>& history, int B) {
  if (B < 1 || B > 62) throw ConfigError("comparison width must be in [1, 62], got " + std::to_string(B));
  const auto n = static_cast<int>(history.size());
  if (n < 2) throw ConfigError("comparison feedback needs at least two intervals");
  const double current = history.back();
  FeedbackWord w;
  w.scheme = Scheme::Comparison;
  w.width = B;
  for (int b = 1; b <= B; ++b) {
    // Q-bar_{n-b} = 0 for n - b <= 0, and Q-bar >= 0 always forces -1 there.
    const double earlier = n - b >= 1 ? history[static_cast<std::size_t>(n - b - 1)] : 0.0;
    const int f = current < earlier ? 1 : -1;
    w.signs.push_back(f);
    w.payload = (w.payload << 1) | (f > 0 ? 1U : 0U);
  }
  return w;
}

std::vector<CuttingPlane> comparisonPlanes(const FeedbackWord& word, const std::vector<HermitianMatrix>& covariances,
                                           int interval) {
  const int usable = std::min(static_cast<int>(word.signs.size()), interval - 1);
  if (static_cast<int>(covariances.size()) < usable + 1) {
    throw DimensionMismatch("comparison planes need " + std::to_string(usable + 1) + " covariances");
  }
  const HermitianMatrix& current = covariances.back();
  std::vector<CuttingPlane> planes;
  for (int b = 1; b <= usable; ++b) {
    const HermitianMatrix& earlier = covariances[covariances.size() - 1 - static_cast<std::size_t>(b)];
    const double f = word.signs[static_cast<std::size_t>(b - 1)];
    planes.push_back({(current - earlier) * f, 0.0, interval, b, 0.0});
  }
  return planes;
}

Eigen::MatrixXd neutralBasis(const HermitianMatrix& center) {
  const RealVec g = cvec(center);
  const auto n = g.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - 1);
}

ComparisonDesign designComparisonCovariance(const HermitianMatrix& prev, const HermitianMatrix& center, double power,
                                            CounterRng& rng, int maxTries) {
  const Eigen::MatrixXd v = neutralBasis(center);
  double norm = power / 5.0;
  for (int attempt = 1; attempt <= maxTries; ++attempt) {
    // Near a rank-deficient S almost every full-size step leaves the cone.
    // The cut is invariant to the scale of delta, so shrink instead.
    if (attempt > 1 && (attempt - 1) % kShrinkEvery == 0) norm *= 0.5;
    Eigen::VectorXd p(v.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.gaussian();
    p *= norm / p.norm();
    const HermitianMatrix delta = cmat(v * p);
    const HermitianMatrix s = prev + delta;
    if (s.trace() <= power * (1.0 + kPsdTolerance) && minEigenvalue(s) >= -kPsdTolerance) {
      return {s, delta, attempt, norm};
    }
  }
  throw RetryExhausted("no admissible probing matrix after " + std::to_string(maxTries) + " draws");
}

int randomBeamCount(int N) { return std::max(1, (3 * N - 1) / 2); }

int randomBeamBits(int N) {
  const int count = randomBeamCount(N);
  int bits = 0;
  while ((1 << bits) < count) ++bits;
  return bits;
}

RandomBeamResult randomBeamformingRun(const HermitianMatrix& g, int N, double power, double tm, CounterRng& rng) {
  if (N < 1) throw ConfigError("random beamforming needs N >= 1");
  RandomBeamResult out;
  out.candidates = randomBeamCount(N);
  out.feedbackBits = randomBeamBits(N);
  double best = -1.0;
  ComplexVec bestBeam;
  for (int i = 0; i < out.candidates; ++i) {
    const ComplexVec w = randomBeam(g.dim(), power, rng);
    const double energy = tm * g.quadraticForm(w);
    if (energy > best) {
      best = energy;
      bestBeam = w;
      out.winnerIndex = i;
    }
  }
  out.winner = bestBeam / bestBeam.norm();
  out.gain = beamformingGain(g, out.winner);
  out.word.scheme = Scheme::RandomBeam;
  out.word.width = out.feedbackBits;
  out.word.payload = static_cast<std::uint64_t>(out.winnerIndex);
  out.word.winner = out.winnerIndex;
  return out;
}

std::vector<double> randomBeamformingCurve(const HermitianMatrix& g, int maxN, double power, CounterRng& rng) {
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(std::max(0, maxN)));
  double best = -1.0;
  ComplexVec bestBeam;
  int drawn = 0;
  for (int n = 1; n <= maxN; ++n) {
    for (; drawn < randomBeamCount(n); ++drawn) {
      const ComplexVec w = randomBeam(g.dim(), power, rng);
      const double energy = g.quadraticForm(w);
      if (energy > best) {
        best = energy;
        bestBeam = w;
      }
    }
    curve.push_back(beamformingGain(g, bestBeam / bestBeam.norm()));
  }
  return curve;
}

}  // namespace wet
