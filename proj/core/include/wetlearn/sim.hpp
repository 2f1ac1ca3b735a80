// SPDX-License-Identifier: Apache-2.0
//
// Per-trial protocol driver and Monte-Carlo aggregation.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wetlearn/accpm.hpp"
#include "wetlearn/channel.hpp"
#include "wetlearn/schemes.hpp"

namespace wet {

enum class RelaxCadence { EveryInterval, OnDemand };

struct SimConfig {
  ChannelParams channel;
  Scheme scheme = Scheme::Quantization;
  std::optional<int> B = 2;  ///< nullopt selects the infinite-resolution quantizer
  int N = 100;
  double power = 1.0;  ///< watts
  double tm = 1.0;
  double tf = 0.5;
  std::optional<int> pruneKeep;
  double alpha = 0.0;  ///< relative measurement error bound
  bool robust = false;
  RelaxCadence relaxCadence = RelaxCadence::EveryInterval;
  /// Normalize by the measured (possibly noisy) first-interval energy.
  bool noisyReference = true;
  bool augmentedPruningMetric = false;
  int trials = 50;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
  bool infiniteB() const { return !B.has_value(); }
};

struct IntervalRecord {
  int n = 0;
  HermitianMatrix s;
  double q = 0.0;     ///< measured energy
  double qBar = 0.0;  ///< normalized measurement
  FeedbackWord feedback;
  int planesAdded = 0;
  int planesPruned = 0;
  int planeCount = 0;
  HermitianMatrix center;
  double normError = 0.0;
  double gain = 1.0;  ///< linear
  double gainDb = 0.0;
  bool degenerate = false;
  /// max over stored planes of tr(Sigma Gbar) - gamma - slack
  double truthViolation = -std::numeric_limits<double>::infinity();
  bool truthContained = true;
  int newtonIterations = 0;
  double kktResidual = 0.0;
  double minMargin = std::numeric_limits<double>::infinity();
  /// Deviation of the new training design from a neutral cut at the
  /// previous center (NaN when not applicable).
  double neutrality = std::numeric_limits<double>::quiet_NaN();
  double totalSlack = 0.0;
  int rank = 0;  ///< equality-system rank (infinite-B mode)
};

struct TrialRecord {
  int trial = 0;
  std::vector<IntervalRecord> intervals;
  bool failed = false;
  std::string failure;
  int failedAt = 0;
  HermitianMatrix estimate;
  ComplexVec beam;
  double finalGainDb = 0.0;
  double chiStarDb = 0.0;
  bool degenerateEstimate = false;
  bool rankDeficient = false;
  int truthViolations = 0;  ///< intervals whose working set excludes Gbar
};

/// Tm tr(G S), perturbed by a uniform error on [-alpha Q, alpha Q].
double measureEnergy(const HermitianMatrix& g, const HermitianMatrix& s, double tm, double alpha, CounterRng& rng);

/// Runs N intervals of the configured scheme on one channel realization.
/// Infinite-B quantization is delegated to runQuantizationInfiniteB.
/// EmptyInterior is recorded as a failed trial.
TrialRecord runTrial(const SimConfig& cfg, const ChannelRealization& realization, int trial = 0);

/// Quantization with unquantized feedback: every interval contributes the
/// equality (mT/P) tr(G S_n) = Q-bar_n and the estimate is the max-logdet
/// point of the resulting affine slice.
TrialRecord runQuantizationInfiniteB(const SimConfig& cfg, const ChannelRealization& realization, int trial = 0);

/// Runs cfg.trials trials over `threads` workers; the result is ordered by
/// trial index and independent of the thread count.
std::vector<TrialRecord> runMonteCarlo(const SimConfig& cfg, int threads = 1,
                                       const std::function<void(const TrialRecord&)>& onTrial = {});

struct CurvePoint {
  int N = 0;
  double mean = 0.0;
  double stdError = 0.0;
  int trials = 0;
};

struct Aggregate {
  std::vector<CurvePoint> normError;  ///< empty for random beamforming
  std::vector<CurvePoint> gainDb;
  int failedTrials = 0;
  int totalTrials = 0;
};

/// Mean and standard error (sample sd / sqrt(k)) over successful trials at
/// each grid point. Throws EmptyInput when no trial succeeded.
Aggregate aggregate(const std::vector<TrialRecord>& records, const std::vector<int>& grid);

struct NetEnergyInputs {
  std::vector<HermitianMatrix> training;  ///< S_1..S_N
  double ts = 0.0;                        ///< Tm + Tf
  double blockLength = 0.0;               ///< T
  double power = 0.0;
  ComplexVec beam;  ///< unit norm
  double em = 0.0;  ///< energy spent per measurement
  double ef = 0.0;  ///< energy spent per feedback
};

/// Net energy over one block: sum_n Ts tr(G S_n) + P (T - N Ts) v^H G v
/// - N (Em + Ef).
double netEnergy(const HermitianMatrix& g, const NetEnergyInputs& in);

}  // namespace wet
