#include "guidelab/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace guidelab;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "guidelab_test_data";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

FormatError::Kind decode_error(const std::vector<unsigned char>& bytes) {
  try {
    decode_dataset(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatError::Kind::io;
}

}  // namespace

TEST(Generate, SingleGaussianMean) {
  const auto d = isotropic_mixture({Vector::Zero(64)}, 1.0);
  const Eigen::Index n = 10000;
  const auto data = generate(d, n, 11);
  const Vector mean = data.points.colwise().mean().transpose();
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < 64; ++j) EXPECT_LT(std::abs(mean[j]), bound) << j;
}

TEST(Generate, BalancedLabelCounts) {
  const auto d = gmm_circle();
  const Eigen::Index n = 8000;
  const auto data = generate(d, n, 5);
  // Binomial(8000, 1/8): mean 1000, sd sqrt(n p (1 - p)); the [900, 1100] window
  // is more than 3 sd wide on each side.
  const double sd = std::sqrt(n * 0.125 * 0.875);
  ASSERT_GT(100.0 / sd, 3.0);
  std::vector<int> counts(8, 0);
  for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) {
    EXPECT_GE(c, 900);
    EXPECT_LE(c, 1100);
  }
}

TEST(Generate, PerClassMeansConverge) {
  const auto d = gmm_circle();
  const auto data = generate(d, 8000, 9);
  for (int k = 0; k < 8; ++k) {
    Vector sum = Vector::Zero(64);
    int count = 0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      if (data.labels[static_cast<std::size_t>(i)] != k) continue;
      sum += data.points.row(i).transpose();
      ++count;
    }
    const Vector mean = sum / count;
    for (int j = 0; j < 64; ++j) {
      const double sd = j < 2 ? 0.5 : 0.01;
      EXPECT_LT(std::abs(mean[j] - d.components[static_cast<std::size_t>(k)].mean[j]), 5.0 * sd / std::sqrt(count));
    }
  }
}

TEST(Generate, LabelsMatchGeneratingComponent) {
  const auto d = gmm_circle(8, 10.0, 0.5, 16, 0.01);
  const auto data = generate(d, 2000, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int y = data.labels[static_cast<std::size_t>(i)];
    const Vector diff = data.points.row(i).transpose() - d.components[static_cast<std::size_t>(y)].mean;
    EXPECT_LT(diff.head(2).norm(), 3.5);  // well inside the 7.65 half-gap to the next mode
  }
}

TEST(Generate, Deterministic) {
  const auto d = gmm_circle();
  EXPECT_TRUE(generate(d, 500, 42) == generate(d, 500, 42));
  EXPECT_FALSE(generate(d, 500, 42) == generate(d, 500, 43));
  // Point i does not depend on n.
  const auto small = generate(d, 10, 42);
  const auto large = generate(d, 500, 42);
  EXPECT_TRUE(small == large.head(10));
}

TEST(Generate, OtherManifolds) {
  const auto r = generate(rings({2.0, 5.0}, 0.05, 8, 0.01), 400, 1);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double radius = r.points.row(i).head(2).norm();
    EXPECT_NEAR(radius, r.labels[static_cast<std::size_t>(i)] == 0 ? 2.0 : 5.0, 0.3);
  }
  const auto m = generate(moons(3.0, 0.05, 4, 0.01), 200, 1);
  EXPECT_EQ(m.num_classes, 2);
  EXPECT_TRUE(m.points.allFinite());
}

TEST(Descriptor, RejectsInvalid) {
  auto d = gmm_circle();
  d.components[0].weight = 0.5;
  EXPECT_THROW(d.validate(), InvalidArgument);
  auto e = gmm_circle();
  e.components[1].sigma = 0.0;
  EXPECT_THROW(e.validate(), InvalidArgument);
  EXPECT_THROW(generate(d, 10, 1), InvalidArgument);
  EXPECT_THROW(generate(gmm_circle(), 0, 1), InvalidArgument);
}

TEST(Descriptor, TextRoundTrip) {
  for (const auto& d : {gmm_circle(), rings({1.0, 2.5}, 0.1, 6, 0.02), moons(2.0, 0.1, 3, 0.05)}) {
    EXPECT_TRUE(ManifoldDescriptor::from_text(d.to_text()) == d);
  }
}

TEST(Container, RoundTripBitExact) {
  const auto data = generate(gmm_circle(), 300, 17);
  const std::string path = temp_path("round.glab");
  save(data, path);
  const auto back = load_dataset(path);
  EXPECT_TRUE(back == data);
  ASSERT_TRUE(back.descriptor.has_value());
  EXPECT_EQ(back.seed, 17u);
}

TEST(Container, ErrorKinds) {
  const auto data = generate(gmm_circle(4, 5.0, 0.5, 8, 0.01), 20, 2);
  const auto bytes = encode_dataset(data);

  EXPECT_EQ(decode_error({}), FormatError::Kind::truncated);

  auto corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x5a;
  EXPECT_EQ(decode_error(corrupt), FormatError::Kind::checksum);

  auto version = bytes;
  version[4] = 9;
  EXPECT_EQ(decode_error(version), FormatError::Kind::version_mismatch);

  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(decode_error(magic), FormatError::Kind::bad_magic);

  const std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2));
  EXPECT_EQ(decode_error(cut), FormatError::Kind::truncated);

  EXPECT_THROW(load_dataset(temp_path("does_not_exist.glab")), FormatError);
}
