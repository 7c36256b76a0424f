#include "guidelab/forward.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace guidelab;

namespace {

const NoiseSchedule& schedule() {
  static const NoiseSchedule s = NoiseSchedule::linear_beta(1000, 1e-4, 0.02);
  return s;
}

/// Two-sample energy distance statistic and its permutation p-value.
double energy_statistic(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  auto mean_dist = [](const std::vector<Vector>& x, const std::vector<Vector>& y, bool same) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = same ? i + 1 : 0; j < y.size(); ++j) {
        s += (x[i] - y[j]).norm();
        ++n;
      }
    }
    return s / static_cast<double>(n);
  };
  return 2.0 * mean_dist(a, b, false) - mean_dist(a, a, true) - mean_dist(b, b, true);
}

}  // namespace

TEST(QStep, ZeroNoiseLimit) {
  const auto s = NoiseSchedule::from_betas({1e-12, 1e-12});
  RandomStream rng(1, StreamPurpose::test, 0);
  Vector x = Vector::LinSpaced(64, -3.0, 3.0);
  const Vector y = q_step(x, 1, s, rng);
  EXPECT_LT((y - x).norm(), 1e-5 * std::sqrt(64.0));
}

TEST(QStep, MomentsFromZero) {
  const auto& s = schedule();
  const int t = 700;
  const int draws = 100000;
  RandomStream rng(2, StreamPurpose::test, 0);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = q_step(Vector::Zero(1), t, s, rng)[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(s.beta(t) / draws));
  EXPECT_LT(std::abs(var / s.beta(t) - 1.0), 0.05);
}

TEST(QStep, IteratedVarianceTelescopes) {
  const auto& s = schedule();
  const int t = 300;
  const int draws = 4000;
  const int D = 4;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
  for (int i = 0; i < draws; ++i) {
    RandomStream rng(3, StreamPurpose::test, static_cast<std::uint64_t>(i));
    Vector x = Vector::Zero(D);
    for (int k = 1; k <= t; ++k) x = q_step(x, k, s, rng);
    cov += x * x.transpose();
  }
  cov /= draws;
  const double expected = 1.0 - s.alpha_bar(t);
  for (int a = 0; a < D; ++a) {
    EXPECT_LT(std::abs(cov(a, a) / expected - 1.0), 0.05);
    for (int b = 0; b < a; ++b) EXPECT_LT(std::abs(cov(a, b)), 0.05 * expected);
  }
}

TEST(QSample, IdentityAndMeanCases) {
  const auto& s = schedule();
  const Vector x0 = Vector::LinSpaced(8, -1.0, 1.0);
  RandomStream rng(4, StreamPurpose::test, 0);
  EXPECT_EQ(q_sample(x0, 0, s, rng).x_t, x0);
  const auto mean_case = q_sample(x0, 400, s, Vector::Zero(8));
  EXPECT_EQ(mean_case.x_t, std::sqrt(s.alpha_bar(400)) * x0);
  const auto drawn = q_sample(x0, 400, s, rng);
  const Vector rebuilt = std::sqrt(s.alpha_bar(400)) * x0 + std::sqrt(1.0 - s.alpha_bar(400)) * drawn.eps;
  EXPECT_EQ(drawn.x_t, rebuilt);
  EXPECT_THROW(q_sample(x0, 1001, s, rng), InvalidArgument);
  EXPECT_THROW(q_sample(x0, -1, s, rng), InvalidArgument);
}

TEST(QSample, MatchesIteratedChain) {
  const auto& s = schedule();
  const int t = 150;
  const int n = 10000;
  const Vector x0 = (Vector(2) << 1.5, -0.5).finished();
  std::vector<Vector> closed, iterated;
  for (int i = 0; i < n; ++i) {
    RandomStream a(5, StreamPurpose::test, static_cast<std::uint64_t>(i));
    closed.push_back(q_sample(x0, t, s, a).x_t);
    RandomStream b(6, StreamPurpose::test, static_cast<std::uint64_t>(i));
    Vector x = x0;
    for (int k = 1; k <= t; ++k) x = q_step(x, k, s, b);
    iterated.push_back(x);
  }
  // Permutation test on the pooled sample.
  const double observed = energy_statistic(closed, iterated);
  std::vector<Vector> pooled = closed;
  pooled.insert(pooled.end(), iterated.begin(), iterated.end());
  RandomStream perm(7, StreamPurpose::test, 0);
  const int rounds = 30;
  int exceed = 0;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = pooled.size() - 1; i > 0; --i) std::swap(pooled[i], pooled[perm.below(i + 1)]);
    const std::vector<Vector> a(pooled.begin(), pooled.begin() + n), b(pooled.begin() + n, pooled.end());
    if (energy_statistic(a, b) >= observed) ++exceed;
  }
  const double p = (exceed + 1.0) / (rounds + 1.0);
  EXPECT_GT(p, 0.01);
}

TEST(Posterior, ZeroInputs) {
  const auto& s = schedule();
  const auto m = posterior_mean_var(Vector::Zero(3), Vector::Zero(3), 500, s);
  EXPECT_EQ(m.mean, Vector::Zero(3));
  EXPECT_EQ(m.var, s.posterior_var(500));
}

TEST(Posterior, FirstStep) {
  const auto& s = schedule();
  const Vector xt = Vector::Constant(2, 3.0), x0 = Vector::Constant(2, -1.0);
  const auto m = posterior_mean_var(xt, x0, 1, s);
  EXPECT_NEAR((m.mean - x0).norm(), 0.0, 1e-12);
  EXPECT_EQ(m.var, 0.0);
}

TEST(Posterior, ConsistencyIdentity) {
  const auto& s = schedule();
  const Vector x0 = Vector::LinSpaced(5, -2.0, 2.0);
  for (int t : {2, 10, 500, 1000}) {
    const Vector xt = std::sqrt(s.alpha_bar(t)) * x0;
    const auto m = posterior_mean_var(xt, x0, t, s);
    EXPECT_LT((m.mean - std::sqrt(s.alpha_bar(t - 1)) * x0).norm(), 1e-10) << t;
  }
}

TEST(Posterior, GridBayesOracle) {
  // Scalar diffusion with T = 3: p(x_{t-1} | x_t, x_0) is proportional to
  // q(x_t | x_{t-1}) q(x_{t-1} | x_0); integrate its moments on a fine grid.
  const auto s = NoiseSchedule::from_betas({0.1, 0.2, 0.3});
  const double x0 = 0.7;
  const double xt = -0.4;
  for (int t = 2; t <= 3; ++t) {
    auto normal = [](double x, double mean, double var) {
      return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
    };
    const double h = 1e-4;
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (double u = -8.0; u <= 8.0; u += h) {
      const double w = normal(xt, std::sqrt(s.alpha(t)) * u, s.beta(t)) *
                       normal(u, std::sqrt(s.alpha_bar(t - 1)) * x0, 1.0 - s.alpha_bar(t - 1));
      z += w;
      m1 += w * u;
      m2 += w * u * u;
    }
    const double mean = m1 / z;
    const double var = m2 / z - mean * mean;
    const auto m = posterior_mean_var(Vector::Constant(1, xt), Vector::Constant(1, x0), t, s);
    EXPECT_NEAR(m.mean[0], mean, 1e-6);
    EXPECT_NEAR(m.var, var, 1e-6);
  }
}
