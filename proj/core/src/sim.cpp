// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

#include "barrier.hpp"
#include "wetlearn/errors.hpp"

namespace wet {

namespace {

constexpr double kTruthTolerance = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void scoreEstimate(const ChannelRealization& real, IntervalRecord& ir) {
  ir.normError = (ir.center - real.gBar).frobeniusNorm();
  const DominantDirection d = dominantEigenvector(ir.center);
  ir.degenerate = d.degenerate;
  ir.gain = beamformingGain(real.g, d.vector);
  ir.gainDb = toDb(ir.gain);
}

void scoreTruth(const WorkingSet& ws, const ChannelRealization& real, IntervalRecord& ir) {
  for (const auto& p : ws.planes) ir.truthViolation = std::max(ir.truthViolation, p.value(real.gBar));
  ir.truthContained = !(ir.truthViolation > kTruthTolerance);
}

void finish(TrialRecord& rec, const ChannelRealization& real) {
  rec.chiStarDb = toDb(real.chiStar);
  if (rec.intervals.empty()) return;
  const IntervalRecord& last = rec.intervals.back();
  rec.estimate = last.center;
  rec.finalGainDb = last.gainDb;
  rec.degenerateEstimate = last.degenerate;
  if (last.center.dim() > 0) rec.beam = dominantEigenvector(last.center).vector;
  for (const auto& ir : rec.intervals) rec.truthViolations += ir.truthContained ? 0 : 1;
}

TrialRecord runRandomBeam(const SimConfig& cfg, const ChannelRealization& real, int trial) {
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(trial), CounterRng::kRandomBeam);
  const std::vector<double> curve = randomBeamformingCurve(real.g, cfg.N, cfg.power, rng);
  TrialRecord rec;
  rec.trial = trial;
  for (int n = 1; n <= cfg.N; ++n) {
    IntervalRecord ir;
    ir.n = n;
    ir.normError = kNaN;
    ir.gain = curve[static_cast<std::size_t>(n - 1)];
    ir.gainDb = toDb(ir.gain);
    ir.feedback.scheme = Scheme::RandomBeam;
    ir.feedback.width = randomBeamBits(n);
    rec.intervals.push_back(std::move(ir));
  }
  rec.chiStarDb = toDb(real.chiStar);
  rec.finalGainDb = rec.intervals.back().gainDb;
  return rec;
}

/// Maximizes log det over { G : G = offset + sum_j w_j D_j } after a
/// phase I that maximizes the smallest eigenvalue. Returns false when the
/// slice misses the open PSD cone; x then holds the phase-I point.
bool sliceCenter(const HermitianMatrix& offset, const std::vector<ComplexMat>& dirs, Eigen::VectorXd& w,
                 int& iterations, double& kkt) {
  const auto k = static_cast<Eigen::Index>(dirs.size());
  const int z = offset.dim();
  w = Eigen::VectorXd::Zero(k);
  if (!cholesky(offset)) {
    // variables (w, s): G(w) - s I > 0, maximize s
    std::vector<ComplexMat> d1 = dirs;
    d1.push_back(-ComplexMat::Identity(z, z));
    detail::BarrierProblem p{offset, d1, Eigen::MatrixXd(0, k + 1), Eigen::VectorXd(0),
                             Eigen::VectorXd::Zero(k + 1)};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(k + 1);
    x(k) = minEigenvalue(offset) - 1.0;
    detail::NewtonOptions inner;
    inner.decrementTolerance = 1e-6;
    inner.gradientTolerance = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double t = 1.0; t < 1e16; t *= 8.0) {
      p.objective(k) = -t;
      const auto r = detail::minimizeBarrier(p, x, inner);
      iterations += r.iterations;
      x = r.x;
      if (x(k) > 0.0) {
        found = true;
        break;
      }
      if (x(k) + z / t < 1e-12) break;
    }
    w = x.head(k);
    if (!found) return false;
  }
  if (k == 0) return true;
  detail::BarrierProblem p{offset, dirs, Eigen::MatrixXd(0, k), Eigen::VectorXd(0), Eigen::VectorXd::Zero(k)};
  const auto r = detail::minimizeBarrier(p, w, detail::NewtonOptions{});
  iterations += r.iterations;
  kkt = r.gradientNorm;
  w = r.x;
  return true;
}

}  // namespace

void SimConfig::validate() const {
  channel.validate();
  if (B && *B < 1) throw ConfigError("B must be at least 1");
  if (B && *B > 30) throw ConfigError("B must not exceed 30");
  if (!B && scheme != Scheme::Quantization) throw ConfigError("infinite B is only defined for quantization");
  if (N < 1) throw ConfigError("N must be at least 1");
  if (!(power > 0.0)) throw ConfigError("power must be positive");
  if (!(tm > 0.0) || !(tf > 0.0)) throw ConfigError("Tm and Tf must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
  if (pruneKeep && *pruneKeep < 1) throw ConfigError("prune-keep must be at least 1");
  if (trials < 1) throw ConfigError("trials must be at least 1");
}

double measureEnergy(const HermitianMatrix& g, const HermitianMatrix& s, double tm, double alpha, CounterRng& rng) {
  const double q = harvestedEnergy(g, s, tm);
  if (alpha == 0.0) return q;
  return q + rng.uniform(-alpha * q, alpha * q);
}

TrialRecord runTrial(const SimConfig& cfg, const ChannelRealization& real, int trial) {
  cfg.validate();
  if (cfg.scheme == Scheme::RandomBeam) return runRandomBeam(cfg, real, trial);
  if (cfg.infiniteB()) return runQuantizationInfiniteB(cfg, real, trial);

  const auto t = static_cast<std::uint64_t>(trial);
  CounterRng training(cfg.seed, t, CounterRng::kTraining);
  CounterRng meter(cfg.seed, t, CounterRng::kMeasurement);
  const int m = cfg.channel.mT;
  const int B = *cfg.B;
  const double P = cfg.power;

  AccpmOptions opts;
  opts.augmentedPruningMetric = cfg.augmentedPruningMetric;

  TrialRecord rec;
  rec.trial = trial;
  WorkingSet ws = initialWorkingSet(m, cfg.robust);
  HermitianMatrix s = HermitianMatrix::identity(m) * (P / m);
  std::vector<double> history;
  std::vector<HermitianMatrix> recent;  // S_{n-B} .. S_n
  double reference = 0.0;

  for (int n = 1; n <= cfg.N; ++n) {
    IntervalRecord ir;
    ir.n = n;
    if (n >= 2) {
      if (cfg.scheme == Scheme::Quantization) {
        s = designQuantizationCovariance(ws.center, P, training);
        ir.neutrality = m / P * traceProduct(ws.center, s) - 0.5;
      } else {
        const ComparisonDesign d = designComparisonCovariance(recent.back(), ws.center, P, training);
        s = d.s;
        ir.neutrality = traceProduct(ws.center, d.delta);
      }
    }
    ir.s = s;
    ir.q = measureEnergy(real.g, s, cfg.tm, cfg.alpha, meter);
    if (n == 1) reference = cfg.noisyReference ? ir.q : harvestedEnergy(real.g, s, cfg.tm);
    ir.qBar = n == 1 ? 1.0 : std::max(0.0, ir.q / reference);
    history.push_back(ir.qBar);
    recent.push_back(s);
    if (static_cast<int>(recent.size()) > B + 1) recent.erase(recent.begin());

    if (n >= 2) {
      std::vector<CuttingPlane> planes;
      if (cfg.scheme == Scheme::Quantization) {
        ir.feedback = quantize(ir.qBar, B);
        planes = quantizationPlanes(ir.feedback, s, B, m, P, n);
      } else {
        ir.feedback = comparisonFeedback(history, B);
        planes = comparisonPlanes(ir.feedback, recent, n);
      }
      ir.planesAdded = static_cast<int>(planes.size());
      ws = addPlanes(std::move(ws), planes);

      try {
        if (cfg.robust && cfg.relaxCadence == RelaxCadence::EveryInterval) {
          RelaxReport relax = robustRelax(ws, opts);
          ws = std::move(relax.workingSet);
          ir.totalSlack = relax.totalSlack;
          ir.newtonIterations += relax.newtonIterations;
        }
        CenterReport report;
        try {
          report = analyticCenter(ws, opts);
        } catch (const EmptyInterior&) {
          if (!(cfg.robust && cfg.relaxCadence == RelaxCadence::OnDemand)) throw;
          RelaxReport relax = robustRelax(ws, opts);
          ws = std::move(relax.workingSet);
          ir.totalSlack = relax.totalSlack;
          ir.newtonIterations += relax.newtonIterations;
          report = analyticCenter(ws, opts);
        }
        ws.center = report.center;
        ir.newtonIterations += report.newtonIterations;
        ir.kktResidual = report.kktResidual;

        if (cfg.pruneKeep && static_cast<int>(ws.planes.size()) > *cfg.pruneKeep) {
          PruneReport pr = pruneIrrelevant(ws, *cfg.pruneKeep, opts);
          if (pr.dropped > 0) {
            ws = std::move(pr.workingSet);
            report = analyticCenter(ws, opts);
            ws.center = report.center;
            ir.newtonIterations += report.newtonIterations;
            ir.kktResidual = report.kktResidual;
          }
          ir.planesPruned = pr.dropped;
        }
      } catch (const EmptyInterior& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.failedAt = n;
        break;
      }
    }

    ir.planeCount = static_cast<int>(ws.planes.size());
    ir.center = ws.center;
    ir.minMargin = ws.minMargin(ws.center);
    scoreEstimate(real, ir);
    scoreTruth(ws, real, ir);
    rec.intervals.push_back(std::move(ir));
  }
  finish(rec, real);
  return rec;
}

TrialRecord runQuantizationInfiniteB(const SimConfig& cfg, const ChannelRealization& real, int trial) {
  cfg.validate();
  if (cfg.scheme != Scheme::Quantization || !cfg.infiniteB()) {
    throw ConfigError("infinite-B runs require the quantization scheme with B = inf");
  }
  const auto t = static_cast<std::uint64_t>(trial);
  CounterRng training(cfg.seed, t, CounterRng::kTraining);
  CounterRng meter(cfg.seed, t, CounterRng::kMeasurement);
  const int m = cfg.channel.mT;
  const double P = cfg.power;
  const Eigen::MatrixXd basis = traceFreeBasis(m);
  const auto d = basis.cols();
  const HermitianMatrix offset = HermitianMatrix::identity(m) / m;
  const RealVec offsetVec = cvec(offset);

  TrialRecord rec;
  rec.trial = trial;
  Eigen::MatrixXd rows(0, d);
  Eigen::VectorXd rhs(0);
  HermitianMatrix center = offset;
  HermitianMatrix s = HermitianMatrix::identity(m) * (P / m);
  double reference = 0.0;

  for (int n = 1; n <= cfg.N; ++n) {
    IntervalRecord ir;
    ir.n = n;
    if (n >= 2) {
      s = designQuantizationCovariance(center, P, training);
      ir.neutrality = m / P * traceProduct(center, s) - 0.5;
    }
    ir.s = s;
    ir.q = measureEnergy(real.g, s, cfg.tm, cfg.alpha, meter);
    if (n == 1) reference = cfg.noisyReference ? ir.q : harvestedEnergy(real.g, s, cfg.tm);
    ir.qBar = n == 1 ? 1.0 : ir.q / reference;
    ir.rank = 1;

    if (n >= 2) {
      // (m/P) tr(G S) = qBar with G = I/m + cmat(B y)
      rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
      rhs.conservativeResize(rhs.size() + 1);
      rows.row(rows.rows() - 1) = (m / P) * (basis.transpose() * cvec(s)).transpose();
      rhs(rhs.size() - 1) = ir.qBar - s.trace() / P;

      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-10);
      const auto rank = svd.rank();
      ir.rank = static_cast<int>(rank) + 1;
      if (ir.rank < std::min<int>(n, m * m)) rec.rankDeficient = true;
      const Eigen::VectorXd yp = svd.solve(rhs);
      if (rank == d) {
        center = cmat(offsetVec + basis * yp);
      } else {
        const Eigen::MatrixXd z = svd.matrixV().rightCols(d - rank);
        std::vector<ComplexMat> dirs;
        for (Eigen::Index j = 0; j < z.cols(); ++j) dirs.push_back(cmat(basis * z.col(j)).dense());
        const HermitianMatrix start = cmat(offsetVec + basis * yp);
        Eigen::VectorXd w;
        double kkt = 0.0;
        const bool interior = sliceCenter(start, dirs, w, ir.newtonIterations, kkt);
        ir.kktResidual = kkt;
        ir.degenerate = !interior;
        center = cmat(offsetVec + basis * (yp + z * w));
      }
    }
    ir.center = center;
    scoreEstimate(real, ir);
    rec.intervals.push_back(std::move(ir));
  }
  finish(rec, real);
  return rec;
}

std::vector<TrialRecord> runMonteCarlo(const SimConfig& cfg, int threads,
                                       const std::function<void(const TrialRecord&)>& onTrial) {
  cfg.validate();
  std::vector<TrialRecord> out(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  std::mutex lock;
  std::exception_ptr error;
  ChannelParams channel = cfg.channel;
  channel.rngSeed = cfg.seed;

  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      try {
        const ChannelRealization real = generateChannel(channel, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = runTrial(cfg, real, i);
        if (onTrial) {
          std::lock_guard<std::mutex> guard(lock);
          onTrial(out[static_cast<std::size_t>(i)]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> guard(lock);
        if (!error) error = std::current_exception();
        next = cfg.trials;
        return;
      }
    }
  };

  const int n = std::clamp(threads, 1, cfg.trials);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Aggregate aggregate(const std::vector<TrialRecord>& records, const std::vector<int>& grid) {
  Aggregate agg;
  agg.totalTrials = static_cast<int>(records.size());
  std::vector<const TrialRecord*> ok;
  for (const auto& r : records) {
    if (r.failed) {
      ++agg.failedTrials;
    } else {
      ok.push_back(&r);
    }
  }
  if (ok.empty()) throw EmptyInput("no successful trials to aggregate");

  auto point = [&](int N, auto metric) -> std::optional<CurvePoint> {
    std::vector<double> xs;
    for (const TrialRecord* r : ok) {
      if (static_cast<int>(r->intervals.size()) < N) continue;
      const double x = metric(r->intervals[static_cast<std::size_t>(N - 1)]);
      if (std::isnan(x)) return std::nullopt;
      xs.push_back(x);
    }
    if (xs.empty()) return std::nullopt;
    CurvePoint p;
    p.N = N;
    p.trials = static_cast<int>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    p.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - p.mean) * (x - p.mean);
      p.stdError = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
    }
    return p;
  };

  for (int N : grid) {
    if (N < 1) throw ConfigError("grid points must be positive");
    if (auto p = point(N, [](const IntervalRecord& ir) { return ir.normError; })) agg.normError.push_back(*p);
    if (auto p = point(N, [](const IntervalRecord& ir) { return ir.gainDb; })) agg.gainDb.push_back(*p);
  }
  return agg;
}

double netEnergy(const HermitianMatrix& g, const NetEnergyInputs& in) {
  const auto n = static_cast<double>(in.training.size());
  double training = 0.0;
  for (const auto& s : in.training) training += harvestedEnergy(g, s, in.ts);
  const double steady = in.power * (in.blockLength - n * in.ts) * g.quadraticForm(in.beam);
  return training + steady - n * (in.em + in.ef);
}

}  // namespace wet
