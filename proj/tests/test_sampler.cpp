#include "guidelab/sampler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

using namespace guidelab;

namespace {

bool same_bytes(const PointMatrix& a, const PointMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

struct Circle {
  NoiseSchedule full = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  NoiseSchedule sampling = full.respace(250);
  ManifoldDescriptor descriptor = gmm_circle();
  DenoiserModel denoiser = DenoiserModel::analytic(descriptor, full);
  ClassifierModel classifier = ClassifierModel::analytic(descriptor, full);
};

const Circle& circle() {
  static const Circle c;
  return c;
}

}  // namespace

TEST(Sampler, UnguidedStandardNormalKeepsNorm) {
  const int D = 64;
  const auto full = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  const auto sampling = full.respace(250);
  const auto denoiser = DenoiserModel::analytic(isotropic_mixture({Vector::Zero(D)}, 1.0), full);
  SampleOptions opt;
  opt.n_chains = 10000;
  opt.seed = 11;
  opt.log_level = LogLevel::none;
  const auto batch = sample(denoiser, nullptr, {}, sampling, opt);
  const double mean_norm = batch.samples.rowwise().norm().mean();
  EXPECT_LT(std::abs(mean_norm / std::sqrt(double(D)) - 1.0), 0.02) << mean_norm;
}

TEST(Sampler, ZeroScaleGeoGuideMatchesUnguided) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 64;
  opt.seed = 5;
  const auto plain = sample(c.denoiser, nullptr, {}, c.sampling, opt);
  const auto zero = sample(c.denoiser, &c.classifier, {GuidanceKind::geoguide, 0.0}, c.sampling, opt);
  EXPECT_TRUE(same_bytes(plain.samples, zero.samples));
}

TEST(Sampler, GeoGuideHitsTargetClass) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 256;
  opt.seed = 9;
  opt.log_level = LogLevel::none;
  const auto batch = sample(c.denoiser, &c.classifier, {GuidanceKind::geoguide, 2.0}, c.sampling, opt);
  int hits = 0;
  for (Eigen::Index i = 0; i < batch.samples.rows(); ++i) {
    const Vector logp = c.classifier.class_logprobs(batch.samples.row(i).transpose(), 0);
    Eigen::Index best = 0;
    logp.maxCoeff(&best);
    EXPECT_EQ(batch.targets[static_cast<std::size_t>(i)], static_cast<int>(i % 8));
    hits += best == batch.targets[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(hits / 256.0, 0.9);
}

TEST(Sampler, ThreadCountDoesNotChangeOutput) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 40;
  opt.seed = 3;
  const auto one = sample(c.denoiser, &c.classifier, {GuidanceKind::adm_g, 1.0}, c.sampling, opt);
  opt.threads = 4;
  const auto four = sample(c.denoiser, &c.classifier, {GuidanceKind::adm_g, 1.0}, c.sampling, opt);
  EXPECT_TRUE(same_bytes(one.samples, four.samples));
  ASSERT_EQ(one.logs.size(), four.logs.size());
  for (std::size_t i = 0; i < one.logs.size(); ++i) {
    ASSERT_EQ(one.logs[i].records.size(), four.logs[i].records.size());
    for (std::size_t j = 0; j < one.logs[i].records.size(); ++j) {
      EXPECT_EQ(one.logs[i].records[j].adjustment_norm, four.logs[i].records[j].adjustment_norm);
    }
  }
}

TEST(Sampler, RespacedRunUsesParentAlphaBar) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 2;
  opt.seed = 1;
  const auto batch = sample(c.denoiser, &c.classifier, {GuidanceKind::geoguide, 1.0}, c.sampling, opt);
  for (const auto& log : batch.logs) {
    ASSERT_EQ(log.records.size(), 250u);
    for (std::size_t j = 0; j < log.records.size(); ++j) {
      const auto& r = log.records[j];
      EXPECT_EQ(r.step, static_cast<int>(j));
      EXPECT_EQ(r.k, 250 - static_cast<int>(j));
      EXPECT_EQ(r.alpha_bar, c.full.alpha_bar(r.t));
    }
    EXPECT_EQ(log.records.front().t, 1000);
    EXPECT_EQ(log.records.back().t, 4);
  }
}

TEST(Sampler, ActiveNormIsConstant) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 8;
  opt.seed = 2;
  const double s = 1.5;
  GuidanceRule rule{GuidanceKind::geoguide, s, 0.4};
  const auto batch = sample(c.denoiser, &c.classifier, rule, c.sampling, opt);
  const double expected = s * 8.0 / 250.0;
  for (const auto& log : batch.logs) {
    int active = 0;
    for (const auto& r : log.records) {
      if (r.guidance_active) {
        ++active;
        EXPECT_LT(std::abs(r.adjustment_norm - expected), 1e-12);
      } else {
        EXPECT_EQ(r.adjustment_norm, 0.0);
      }
    }
    EXPECT_EQ(active, 100);
  }
}

TEST(Sampler, SingleChainMatchesBatch) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 5;
  opt.seed = 21;
  opt.target = 6;
  const GuidanceRule rule{GuidanceKind::geoguide_scaled, 3.0};
  const auto batch = sample(c.denoiser, &c.classifier, rule, c.sampling, opt);
  const auto solo = sample_chain(c.denoiser, &c.classifier, rule, c.sampling, 6, 3, 21, LogLevel::none, 1);
  EXPECT_EQ(Vector(batch.samples.row(3).transpose()), solo.x0);
  EXPECT_EQ(batch.targets[3], 6);
}

TEST(Sampler, TraceLevels) {
  const auto& c = circle();
  SampleOptions opt;
  opt.n_chains = 1;
  opt.log_level = LogLevel::thinned;
  const auto thinned = sample(c.denoiser, nullptr, {}, c.sampling, opt);
  ASSERT_EQ(thinned.logs[0].trace.size(), 51u);  // every 5th of 250 steps plus x_0
  EXPECT_EQ(thinned.logs[0].trace.back().step, 250);
  EXPECT_EQ(thinned.logs[0].trace.back().x, thinned.logs[0].x0);
  opt.log_level = LogLevel::full;
  const auto full = sample(c.denoiser, nullptr, {}, c.sampling, opt);
  EXPECT_EQ(full.logs[0].trace.size(), 251u);
  EXPECT_EQ(full.logs[0].trace.front().x, thinned.logs[0].trace.front().x);
}

TEST(Sampler, RejectsForeignSchedule) {
  const auto& c = circle();
  const auto other = NoiseSchedule::linear_beta(1000, 1e-4, 0.03);
  SampleOptions opt;
  EXPECT_THROW(sample(c.denoiser, nullptr, {}, other, opt), MismatchError);
  EXPECT_THROW(sample(c.denoiser, nullptr, {GuidanceKind::geoguide, 1.0}, c.sampling, opt), InvalidArgument);
  opt.target = 8;
  EXPECT_THROW(sample(c.denoiser, &c.classifier, {GuidanceKind::geoguide, 1.0}, c.sampling, opt), InvalidArgument);
}

TEST(ManifoldDistance, SinglePointAtOrigin) {
  const int D = 5;
  LabeledDataset origin{PointMatrix::Zero(1, D), {0}, 1, std::nullopt, 0};
  TrajectoryLog log;
  RandomStream rng(4, StreamPurpose::test, 0);
  for (int i = 0; i < 6; ++i) log.trace.push_back({i, 100 - i, 0.1 * i, rng.normal_vector(D)});
  const auto d = trace_manifold_distance(log, origin);
  ASSERT_EQ(d.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(d[i].d_hat, log.trace[i].x.norm());
    EXPECT_DOUBLE_EQ(d[i].d_theory, std::sqrt((1.0 - 0.1 * i) * D));
  }
}

TEST(ManifoldDistance, NearestScaledPoint) {
  PointMatrix pts(3, 2);
  pts << 0, 0, 4, 0, 0, 10;
  const Vector x(Eigen::Vector2d(1.0, 4.0));
  // sqrt(0.25) * rows = (0,0), (2,0), (0,5): nearest is (0,5) at distance sqrt(2).
  EXPECT_DOUBLE_EQ(distance_to_scaled_set(x, pts, 0.25), std::sqrt(2.0));
}

TEST(ManifoldDistance, ForwardTrajectoriesFollowLaw) {
  const auto& c = circle();
  const auto data = generate(c.descriptor, 4000, 7);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto log = forward_trajectory(data.points.row(static_cast<Eigen::Index>(i)).transpose(), c.sampling, 77, i, 5);
    for (const auto& r : trace_manifold_distance(log, data)) {
      if (1.0 - r.alpha_bar >= 0.1) ratios.push_back(r.d_hat / r.d_theory);
    }
    EXPECT_EQ(log.trace.back().x, data.points.row(static_cast<Eigen::Index>(i)).transpose());
  }
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  const double med = ratios[ratios.size() / 2];
  EXPECT_GE(med, 0.85);
  EXPECT_LE(med, 1.15);
}

TEST(ManifoldDistance, GuidedEndpointsLandNearData) {
  const auto& c = circle();
  const auto data = generate(c.descriptor, 4000, 7);
  SampleOptions opt;
  opt.n_chains = 16;
  opt.seed = 8;
  opt.log_level = LogLevel::thinned;
  const auto batch = sample(c.denoiser, &c.classifier, {GuidanceKind::adm_g, 1.0}, c.sampling, opt);
  for (const auto& log : batch.logs) {
    const auto d = trace_manifold_distance(log, data);
    EXPECT_LT(d.back().d_hat, 0.25 * d.front().d_hat);
    EXPECT_EQ(d.back().d_theory, 0.0);
  }
}
