#pragma once

#include "guidelab/core.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace guidelab {

enum class ScheduleKind { linear_beta, linear_alphabar, custom };

/// Which reverse-step variance the sampler uses: the posterior variance
/// (lower bound) or the forward beta (upper bound).
enum class GammaMode { lower, upper };

inline const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::linear_beta: return "linear_beta";
    case ScheduleKind::linear_alphabar: return "linear_alphabar";
    case ScheduleKind::custom: return "custom";
  }
  return "custom";
}

inline const char* to_string(GammaMode mode) {
  return mode == GammaMode::lower ? "lower" : "upper";
}

/// Largest beta allowed; linear-alpha-bar would otherwise reach beta_T = 1.
inline constexpr double kMaxBeta = 1.0 - 1e-6;

/// Per-timestep constants of a discrete diffusion.
///
/// Steps are addressed 1..steps() externally. For a respaced schedule, step k
/// corresponds to the parent timestep timestep(k), and the effective betas are
/// recomputed so alpha_bar(k) equals the parent's alpha_bar at that timestep.
/// alpha_bar(0) is 1 by convention.
class NoiseSchedule {
 public:
  static NoiseSchedule linear_beta(int T, double beta_start, double beta_end,
                                   GammaMode mode = GammaMode::lower) {
    require(T >= 2, "linear_beta: T must be at least 2");
    require(beta_start > 0.0 && beta_start < 1.0 && beta_end > 0.0 && beta_end < 1.0,
            "linear_beta: endpoints must lie in (0, 1)");
    require(beta_start <= beta_end, "linear_beta: beta_start must not exceed beta_end");
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      betas[static_cast<std::size_t>(i)] =
          beta_start + (beta_end - beta_start) * static_cast<double>(i) / static_cast<double>(T - 1);
    }
    betas.back() = beta_end;
    return from_betas(std::move(betas), mode, ScheduleKind::linear_beta);
  }

  /// alpha_bar_t = 1 - t/T, with beta_T clamped to kMaxBeta so every beta stays in (0, 1).
  static NoiseSchedule linear_alphabar(int T, GammaMode mode = GammaMode::lower) {
    require(T >= 2, "linear_alphabar: T must be at least 2");
    std::vector<double> alpha_bars(static_cast<std::size_t>(T));
    for (int t = 1; t < T; ++t) {
      alpha_bars[static_cast<std::size_t>(t - 1)] = 1.0 - static_cast<double>(t) / T;
    }
    alpha_bars.back() = alpha_bars[static_cast<std::size_t>(T - 2)] * (1.0 - kMaxBeta);
    NoiseSchedule s = from_alpha_bars(std::move(alpha_bars), mode);
    s.kind_ = ScheduleKind::linear_alphabar;
    s.terminal_clamped_ = true;
    return s;
  }

  static NoiseSchedule from_betas(std::vector<double> betas, GammaMode mode = GammaMode::lower,
                                  ScheduleKind kind = ScheduleKind::custom) {
    require(betas.size() >= 2, "schedule needs at least two steps");
    std::vector<double> alpha_bars(betas.size());
    double running = 1.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
      require(betas[i] > 0.0 && betas[i] < 1.0, "every beta must lie in (0, 1)");
      running *= 1.0 - betas[i];
      alpha_bars[i] = running;
    }
    NoiseSchedule s;
    s.kind_ = kind;
    s.betas_ = std::move(betas);
    s.alpha_bars_ = std::move(alpha_bars);
    s.gamma_mode_ = mode;
    s.finish_parent();
    return s;
  }

  /// Builds a schedule from a strictly decreasing alpha_bar sequence, back-solving betas.
  static NoiseSchedule from_alpha_bars(std::vector<double> alpha_bars,
                                       GammaMode mode = GammaMode::lower) {
    require(alpha_bars.size() >= 2, "schedule needs at least two steps");
    NoiseSchedule s;
    s.kind_ = ScheduleKind::custom;
    s.gamma_mode_ = mode;
    s.betas_.resize(alpha_bars.size());
    double previous = 1.0;
    for (std::size_t i = 0; i < alpha_bars.size(); ++i) {
      require(alpha_bars[i] > 0.0 && alpha_bars[i] < previous,
              "alpha_bar must be positive and strictly decreasing");
      s.betas_[i] = 1.0 - alpha_bars[i] / previous;
      previous = alpha_bars[i];
    }
    s.alpha_bars_ = std::move(alpha_bars);
    s.finish_parent();
    return s;
  }

  /// Keeps an evenly spaced subsequence of n_steps steps (always including the last).
  NoiseSchedule respace(int n_steps) const {
    require(n_steps >= 2, "respace: need at least two steps");
    require(n_steps <= steps(), "respace: cannot keep more steps than the schedule has");
    if (n_steps == steps()) return *this;
    NoiseSchedule s;
    s.kind_ = kind_;
    s.gamma_mode_ = gamma_mode_;
    s.fingerprint_ = fingerprint_;
    s.training_steps_ = training_steps_;
    s.terminal_clamped_ = terminal_clamped_;
    s.respaced_ = true;
    const auto total = static_cast<std::int64_t>(steps());
    double previous = 1.0;
    for (std::int64_t k = 1; k <= n_steps; ++k) {
      const auto source = static_cast<int>((k * total) / n_steps);  // 1-based
      const double ab = alpha_bar(source);
      s.timesteps_.push_back(timestep(source));
      s.alpha_bars_.push_back(ab);
      s.betas_.push_back(1.0 - ab / previous);
      previous = ab;
    }
    s.fill_derived();
    return s;
  }

  NoiseSchedule with_gamma_mode(GammaMode mode) const {
    NoiseSchedule s = *this;
    s.gamma_mode_ = mode;
    s.fill_derived();
    return s;
  }

  int steps() const { return static_cast<int>(betas_.size()); }
  /// Number of steps of the diffusion the models were trained on.
  int training_steps() const { return training_steps_; }
  bool is_respaced() const { return respaced_; }
  ScheduleKind kind() const { return kind_; }
  GammaMode gamma_mode() const { return gamma_mode_; }
  /// True when the final beta was clamped (linear alpha-bar reaches zero at t = T).
  bool terminal_clamped() const { return terminal_clamped_; }

  /// Parent timestep for step k.
  int timestep(int k) const { return timesteps_.at(index(k)); }
  double beta(int k) const { return betas_.at(index(k)); }
  double alpha(int k) const { return alphas_.at(index(k)); }
  double alpha_bar(int k) const { return k == 0 ? 1.0 : alpha_bars_.at(index(k)); }
  double posterior_var(int k) const { return posterior_vars_.at(index(k)); }
  double gamma(int k) const { return gammas_.at(index(k)); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }
  const std::vector<double>& posterior_vars() const { return posterior_vars_; }
  const std::vector<double>& gammas() const { return gammas_; }
  const std::vector<int>& timesteps() const { return timesteps_; }

  /// Identifies the underlying (un-respaced) diffusion; models record it.
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// The usual requirement that q(x_T | x_0) is close to N(0, I).
  bool reaches_noise(double threshold = 0.01) const { return alpha_bars_.back() <= threshold; }

 private:
  NoiseSchedule() = default;

  std::size_t index(int k) const {
    if (k < 1 || k > steps()) throw InvalidArgument("timestep " + std::to_string(k) + " out of range");
    return static_cast<std::size_t>(k - 1);
  }

  void finish_parent() {
    training_steps_ = steps();
    timesteps_.resize(betas_.size());
    for (int k = 1; k <= steps(); ++k) timesteps_[static_cast<std::size_t>(k - 1)] = k;
    std::uint64_t hash = fnv1a(&training_steps_, sizeof training_steps_);
    hash = fnv1a(betas_.data(), betas_.size() * sizeof(double), hash);
    fingerprint_ = hash;
    fill_derived();
  }

  void fill_derived() {
    const std::size_t n = betas_.size();
    alphas_.resize(n);
    posterior_vars_.resize(n);
    gammas_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      alphas_[i] = 1.0 - betas_[i];
      const double previous = i == 0 ? 1.0 : alpha_bars_[i - 1];
      posterior_vars_[i] = (1.0 - previous) / (1.0 - alpha_bars_[i]) * betas_[i];
      gammas_[i] = gamma_mode_ == GammaMode::lower ? posterior_vars_[i] : betas_[i];
    }
  }

  ScheduleKind kind_ = ScheduleKind::custom;
  GammaMode gamma_mode_ = GammaMode::lower;
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<double> posterior_vars_;
  std::vector<double> gammas_;
  std::vector<int> timesteps_;
  std::uint64_t fingerprint_ = 0;
  int training_steps_ = 0;
  bool terminal_clamped_ = false;
  bool respaced_ = false;
};

/// Serializable recipe for a schedule: {type, T, beta_start, beta_end, gamma_mode, respace}.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::linear_beta;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  GammaMode gamma_mode = GammaMode::lower;
  int respace = 0;  // 0 keeps every step

  /// The full training-length schedule.
  NoiseSchedule build() const {
    switch (kind) {
      case ScheduleKind::linear_beta: return NoiseSchedule::linear_beta(T, beta_start, beta_end, gamma_mode);
      case ScheduleKind::linear_alphabar: return NoiseSchedule::linear_alphabar(T, gamma_mode);
      case ScheduleKind::custom: break;
    }
    throw InvalidArgument("custom schedules have no recipe");
  }

  /// The schedule actually walked by the sampler.
  NoiseSchedule build_sampling() const {
    NoiseSchedule parent = build();
    return respace > 0 ? parent.respace(respace) : parent;
  }
};

}  // namespace guidelab
