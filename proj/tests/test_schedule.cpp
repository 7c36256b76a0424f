#include "guidelab/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace guidelab;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(LinearBeta, EndpointsAndMonotone) {
  const auto s = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_EQ(s.beta(1), 1e-4);
  EXPECT_EQ(s.beta(1000), 0.02);
  for (int t = 2; t <= 1000; ++t) EXPECT_GT(s.beta(t), s.beta(t - 1));
}

TEST(LinearBeta, TwoStepProduct) {
  const auto s = NoiseSchedule::linear_beta(2, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(s.alpha_bar(2), 0.25);
}

TEST(LinearBeta, ReachesNoise) {
  const auto s = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  double product = 1.0;
  for (int t = 1; t <= 1000; ++t) product *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
  EXPECT_LT(product, 0.01);
  EXPECT_LT(rel(s.alpha_bar(1000), product), 1e-12);
  EXPECT_TRUE(s.reaches_noise());
}

TEST(LinearBeta, RejectsBadEndpoints) {
  EXPECT_THROW(NoiseSchedule::linear_beta(10, 0.02, 1e-4), InvalidArgument);
  EXPECT_THROW(NoiseSchedule::linear_beta(10, 0.0, 0.02), InvalidArgument);
  EXPECT_THROW(NoiseSchedule::linear_beta(10, 1e-4, 1.0), InvalidArgument);
  EXPECT_THROW(NoiseSchedule::linear_beta(1, 1e-4, 0.02), InvalidArgument);
}

TEST(LinearAlphaBar, ExactValues) {
  const auto s = NoiseSchedule::linear_alphabar(1000);
  EXPECT_EQ(s.alpha_bar(500), 0.5);
  for (int t = 1; t < 1000; ++t) EXPECT_EQ(s.alpha_bar(t), 1.0 - t / 1000.0);
  EXPECT_TRUE(s.terminal_clamped());
  EXPECT_LT(s.alpha_bar(1000), 1e-8);
  EXPECT_GT(s.alpha_bar(1000), 0.0);
}

TEST(LinearAlphaBar, BackSolvedBetasForFourSteps) {
  const auto s = NoiseSchedule::linear_alphabar(4);
  EXPECT_NEAR(s.beta(1), 0.25, 1e-15);
  EXPECT_NEAR(s.beta(2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.beta(3), 0.5, 1e-15);
  EXPECT_NEAR(s.beta(4), kMaxBeta, 1e-12);
  EXPECT_LT(s.beta(4), 1.0);
}

TEST(Schedule, DerivedQuantities) {
  for (const auto& s : {NoiseSchedule::linear_beta(1000, 1e-4, 0.02), NoiseSchedule::linear_alphabar(1000)}) {
    double log_sum = 0.0;
    double running = 1.0;
    for (int t = 1; t <= s.steps(); ++t) {
      EXPECT_GT(s.beta(t), 0.0);
      EXPECT_LT(s.beta(t), 1.0);
      EXPECT_EQ(s.alpha(t), 1.0 - s.beta(t));
      if (t > 1) {
        EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      }
      running *= s.alpha(t);
      EXPECT_LT(rel(running, s.alpha_bar(t)), 1e-12);
      log_sum += std::log(s.alpha(t));
      const double expected_post = (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t)) * s.beta(t);
      EXPECT_LT(rel(s.posterior_var(t), expected_post), 1e-12) << t;
      EXPECT_LE(s.posterior_var(t), s.beta(t));
      EXPECT_EQ(s.gamma(t), s.posterior_var(t));
    }
    EXPECT_LT(rel(std::exp(log_sum), s.alpha_bar(s.steps())), 1e-10);
    EXPECT_EQ(s.posterior_var(1), 0.0);
    EXPECT_EQ(s.alpha_bar(0), 1.0);
  }
}

TEST(Schedule, GammaModes) {
  const auto lower = NoiseSchedule::linear_beta(100, 1e-3, 0.05, GammaMode::lower);
  const auto upper = lower.with_gamma_mode(GammaMode::upper);
  for (int t = 1; t <= 100; ++t) {
    EXPECT_EQ(upper.gamma(t), upper.beta(t));
    EXPECT_EQ(lower.gamma(t), lower.posterior_var(t));
    EXPECT_LE(lower.posterior_var(t), upper.gamma(t));
  }
  EXPECT_EQ(lower.fingerprint(), upper.fingerprint());
}

TEST(Schedule, OutOfRangeTimestep) {
  const auto s = NoiseSchedule::linear_beta(10, 1e-3, 0.05);
  EXPECT_THROW(s.beta(0), InvalidArgument);
  EXPECT_THROW(s.beta(11), InvalidArgument);
}

TEST(Respace, IdentityKeepsEverything) {
  const auto s = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  const auto r = s.respace(1000);
  EXPECT_EQ(r.alpha_bars(), s.alpha_bars());
  EXPECT_FALSE(r.is_respaced());
}

TEST(Respace, LinearAlphaBarSubsequence) {
  const auto s = NoiseSchedule::linear_alphabar(1000);
  const auto r = s.respace(250);
  ASSERT_EQ(r.steps(), 250);
  EXPECT_TRUE(r.is_respaced());
  EXPECT_EQ(r.training_steps(), 1000);
  EXPECT_EQ(r.fingerprint(), s.fingerprint());
  EXPECT_EQ(r.timestep(250), 1000);
  for (int k = 1; k < 250; ++k) {
    EXPECT_EQ(r.timestep(k), 4 * k);
    EXPECT_EQ(r.alpha_bar(k), 1.0 - r.timestep(k) / 1000.0);
  }
}

TEST(Respace, TelescopedProductMatchesParent) {
  const auto s = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  const auto r = s.respace(50);
  double running = 1.0;
  for (int k = 1; k <= 50; ++k) {
    running *= 1.0 - r.beta(k);
    EXPECT_LT(rel(running, s.alpha_bar(r.timestep(k))), 1e-12);
    EXPECT_EQ(r.alpha_bar(k), s.alpha_bar(r.timestep(k)));
    EXPECT_LE(r.posterior_var(k), r.beta(k));
  }
}

TEST(Respace, RoundTripSharedTimesteps) {
  const auto s = NoiseSchedule::linear_alphabar(1000);
  const auto r = s.respace(125);
  for (int k = 1; k <= r.steps(); ++k) {
    EXPECT_LE(rel(r.alpha_bar(k), s.alpha_bar(r.timestep(k))), 1e-12);
  }
}

TEST(Respace, Rejections) {
  const auto s = NoiseSchedule::linear_beta(100, 1e-4, 0.02);
  EXPECT_THROW(s.respace(1), InvalidArgument);
  EXPECT_THROW(s.respace(101), InvalidArgument);
}

TEST(ScheduleSpec, BuildsSamplingSchedule) {
  ScheduleSpec spec;
  spec.respace = 250;
  const auto full = spec.build();
  const auto sampling = spec.build_sampling();
  EXPECT_EQ(full.steps(), 1000);
  EXPECT_EQ(sampling.steps(), 250);
  EXPECT_EQ(full.fingerprint(), sampling.fingerprint());
  EXPECT_NE(NoiseSchedule::linear_alphabar(1000).fingerprint(), full.fingerprint());
}
