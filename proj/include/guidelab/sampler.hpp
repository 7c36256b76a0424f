#pragma once

// Reverse ancestral sampling with pluggable guidance, plus forward-process
// trajectories and manifold-distance tracing.

#include "guidelab/core.hpp"
#include "guidelab/data.hpp"
#include "guidelab/forward.hpp"
#include "guidelab/guidance.hpp"
#include "guidelab/models.hpp"
#include "guidelab/random.hpp"
#include "guidelab/schedule.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace guidelab {

/// What each chain keeps besides its final sample.
enum class LogLevel {
  none,     // final samples only
  norms,    // per-step records
  thinned,  // per-step records plus x_t every trace_stride steps
  full,     // per-step records plus x_t at every step
};

struct StepRecord {
  int step = 0;  // executed steps before this one
  int k = 0;     // sampling-schedule step
  int t = 0;     // parent timestep
  double alpha_bar = 1.0;
  double adjustment_norm = 0.0;  // ||s A_t||
  bool guidance_active = false;
};

/// A stored state. x is x_t at the start of step `step`; the final sample has
/// step == executed steps, t == 0 and alpha_bar == 1.
struct TracePoint {
  int step = 0;
  int t = 0;
  double alpha_bar = 1.0;
  Vector x;
};

struct TrajectoryLog {
  std::size_t chain = 0;
  int target = 0;
  std::uint64_t seed = 0;
  GuidanceKind rule = GuidanceKind::none;
  std::vector<StepRecord> records;
  std::vector<TracePoint> trace;
  Vector x0;
};

struct SampleOptions {
  std::size_t n_chains = 1;
  std::uint64_t seed = 0;
  /// Fixed target class, or -1 to cycle chain mod C.
  int target = -1;
  LogLevel log_level = LogLevel::norms;
  /// 0 picks ceil(steps / 50).
  int trace_stride = 0;
  int threads = 1;
};

struct SampleBatch {
  PointMatrix samples;
  std::vector<int> targets;
  std::vector<TrajectoryLog> logs;  // empty when log_level is none
  GuidanceRule rule;
  int steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t schedule_fingerprint = 0;
};

namespace detail {

inline int default_stride(int steps, int requested) {
  if (requested > 0) return requested;
  return std::max(1, (steps + 49) / 50);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes only
/// its own slot, so results do not depend on scheduling. The first exception wins.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1)))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline bool keep_trace(LogLevel level, int step, int stride) {
  if (level == LogLevel::full) return true;
  return level == LogLevel::thinned && step % stride == 0;
}

}  // namespace detail

inline int target_for_chain(const SampleOptions& options, std::size_t chain, int classes) {
  if (options.target >= 0) return options.target;
  return static_cast<int>(chain % static_cast<std::size_t>(std::max(classes, 1)));
}

/// One reverse chain from x_T ~ N(0, I) down to x_0.
inline TrajectoryLog sample_chain(const DenoiserModel& denoiser, const ClassifierModel* classifier,
                                  const GuidanceRule& rule, const NoiseSchedule& schedule, int target,
                                  std::size_t chain, std::uint64_t seed, LogLevel level, int stride) {
  const int D = denoiser.dim();
  const int n = schedule.steps();
  TrajectoryLog log;
  log.chain = chain;
  log.target = target;
  log.seed = seed;
  log.rule = rule.kind;
  if (level != LogLevel::none) log.records.reserve(static_cast<std::size_t>(n));
  RandomStream init(seed, StreamPurpose::sampler_init, chain);
  Vector x = init.normal_vector(D);
  for (int k = n; k >= 1; --k) {
    const int step = n - k;
    const int t = schedule.timestep(k);
    if (detail::keep_trace(level, step, stride)) log.trace.push_back({step, t, schedule.alpha_bar(k), x});
    const Vector eps_hat = denoiser.predict_eps(x, t);
    const Vector mu = mu_from_eps(x, schedule.alpha(k), schedule.alpha_bar(k), eps_hat);
    const Adjustment adj = adjustment(rule, classifier, x, {k, step, n, target}, schedule);
    RandomStream rng(seed, StreamPurpose::sampler_step, chain, static_cast<std::uint32_t>(k));
    x = guided_reverse_step(mu, schedule.gamma(k), adj.A, rule.scale, rng, k == 1);
    if (!x.allFinite()) {
      throw NumericError("sampler: chain " + std::to_string(chain) + " became non-finite at step " +
                         std::to_string(step) + " (t=" + std::to_string(t) + ")");
    }
    if (level != LogLevel::none) {
      log.records.push_back({step, k, t, schedule.alpha_bar(k), rule.scale * adj.A.norm(), adj.active});
    }
  }
  if (level == LogLevel::thinned || level == LogLevel::full) log.trace.push_back({n, 0, 1.0, x});
  log.x0 = std::move(x);
  return log;
}

/// Algorithms of the ADM-G / GeoGuide family: denoiser, optional classifier and a
/// rule over the (possibly respaced) sampling schedule.
inline SampleBatch sample(const DenoiserModel& denoiser, const ClassifierModel* classifier, const GuidanceRule& rule,
                          const NoiseSchedule& schedule, const SampleOptions& options) {
  rule.validate();
  require(options.n_chains >= 1, "sample: need at least one chain");
  if (denoiser.fingerprint() != schedule.fingerprint()) {
    throw MismatchError("sample: denoiser was built for a different noise schedule");
  }
  if (rule.needs_classifier()) {
    require(classifier != nullptr, "sample: guidance rule needs a classifier");
  }
  if (classifier) {
    if (classifier->fingerprint() != schedule.fingerprint()) {
      throw MismatchError("sample: classifier was built for a different noise schedule");
    }
    require(classifier->dim() == denoiser.dim(), "sample: classifier and denoiser dimensions differ");
  }
  const int classes = classifier ? classifier->num_classes() : 1;
  require(options.target < classes, "sample: target class out of range");
  const int stride = detail::default_stride(schedule.steps(), options.trace_stride);

  SampleBatch batch;
  batch.rule = rule;
  batch.steps = schedule.steps();
  batch.seed = options.seed;
  batch.schedule_fingerprint = schedule.fingerprint();
  batch.samples.resize(static_cast<Eigen::Index>(options.n_chains), denoiser.dim());
  batch.targets.resize(options.n_chains);
  std::vector<TrajectoryLog> logs(options.n_chains);
  detail::parallel_for(options.n_chains, options.threads, [&](std::size_t c) {
    const int target = target_for_chain(options, c, classes);
    logs[c] = sample_chain(denoiser, classifier, rule, schedule, target, c, options.seed, options.log_level, stride);
    batch.samples.row(static_cast<Eigen::Index>(c)) = logs[c].x0.transpose();
    batch.targets[c] = target;
  });
  if (options.log_level != LogLevel::none) batch.logs = std::move(logs);
  return batch;
}

/// Forward noising of x0 to every traced step of the schedule. Each stored x_t is an
/// independent one-shot q_sample draw (stream = index, substream = step k).
inline TrajectoryLog forward_trajectory(const Vector& x0, const NoiseSchedule& schedule, std::uint64_t seed,
                                        std::size_t index, int stride = 1) {
  TrajectoryLog log;
  log.chain = index;
  log.seed = seed;
  const int n = schedule.steps();
  for (int k = n; k >= 1; --k) {
    const int step = n - k;
    if (step % stride != 0) continue;
    RandomStream rng(seed, StreamPurpose::forward, index, static_cast<std::uint32_t>(k));
    log.trace.push_back({step, schedule.timestep(k), schedule.alpha_bar(k), q_sample(x0, k, schedule, rng).x_t});
  }
  log.trace.push_back({n, 0, 1.0, x0});
  log.x0 = x0;
  return log;
}

struct DistanceRecord {
  int step = 0;
  int t = 0;
  double alpha_bar = 1.0;
  double d_hat = 0.0;
  double d_theory = 0.0;
};

/// min_i ||x - sqrt(ab) x_i||, by exhaustive scan over the rows.
inline double distance_to_scaled_set(const Vector& x, const PointMatrix& points, double alpha_bar) {
  require(points.rows() >= 1, "manifold distance: empty dataset");
  require(points.cols() == x.size(), "manifold distance: dimension mismatch");
  const double root = std::sqrt(alpha_bar);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = (x.transpose() - root * points.row(i)).squaredNorm();
    best = std::min(best, d);
  }
  return std::sqrt(best);
}

/// d_hat(t) against the scaled dataset and d_theory(t) = sqrt((1 - ab) D) for every
/// stored state of the trajectory.
inline std::vector<DistanceRecord> trace_manifold_distance(const TrajectoryLog& log, const LabeledDataset& dataset) {
  require(dataset.size() >= 1, "manifold distance: empty dataset");
  require(!log.trace.empty(), "manifold distance: trajectory stores no states");
  std::vector<DistanceRecord> out;
  out.reserve(log.trace.size());
  const double D = dataset.dim();
  for (const auto& p : log.trace) {
    out.push_back({p.step, p.t, p.alpha_bar, distance_to_scaled_set(p.x, dataset.points, p.alpha_bar),
                   std::sqrt((1.0 - p.alpha_bar) * D)});
  }
  return out;
}

}  // namespace guidelab
