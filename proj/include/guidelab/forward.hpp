#pragma once

#include "guidelab/core.hpp"
#include "guidelab/random.hpp"
#include "guidelab/schedule.hpp"

#include <cmath>

namespace guidelab {

/// x_t together with the noise that produced it.
struct NoisedSample {
  Vector x_t;
  int t = 0;
  Vector eps;
};

/// One forward transition q(x_t | x_{t-1}).
inline Vector q_step(const Vector& x_prev, int t, const NoiseSchedule& schedule, RandomStream& rng) {
  const double beta = schedule.beta(t);
  return std::sqrt(1.0 - beta) * x_prev + std::sqrt(beta) * rng.normal_vector(x_prev.size());
}

/// Closed-form q(x_t | x_0) with the noise supplied by the caller. t = 0 returns x_0.
inline NoisedSample q_sample(const Vector& x0, int t, const NoiseSchedule& schedule, const Vector& eps) {
  require(t >= 0 && t <= schedule.steps(), "q_sample: timestep out of range");
  require(eps.size() == x0.size(), "q_sample: noise dimension mismatch");
  const double ab = schedule.alpha_bar(t);
  return {std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps, t, eps};
}

inline NoisedSample q_sample(const Vector& x0, int t, const NoiseSchedule& schedule, RandomStream& rng) {
  return q_sample(x0, t, schedule, rng.normal_vector(x0.size()));
}

struct PosteriorMoments {
  Vector mean;
  double var = 0.0;
};

/// Mean and variance of q(x_{t-1} | x_t, x_0).
inline PosteriorMoments posterior_mean_var(const Vector& x_t, const Vector& x0, int t, const NoiseSchedule& schedule) {
  require(x_t.size() == x0.size(), "posterior_mean_var: dimension mismatch");
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double beta = schedule.beta(t);
  const double coef_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
  const double coef_xt = std::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  return {coef_x0 * x0 + coef_xt * x_t, schedule.posterior_var(t)};
}

}  // namespace guidelab
