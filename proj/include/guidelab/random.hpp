#pragma once

// Counter-based random streams. A stream is addressed by (seed, stream, substream)
// so draws for a given chain and timestep never depend on execution order.

#include "guidelab/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace guidelab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Purpose tags keep streams for different consumers disjoint under the same seed.
enum class StreamPurpose : std::uint32_t {
  data = 1,
  forward = 2,
  sampler_init = 3,
  sampler_step = 4,
  training = 5,
  init_params = 6,
  test = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t stream,
               std::uint32_t substream = 0) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose)));
    key_ = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    counter_ = {0u, substream, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
  }

  std::uint32_t next_u32() {
    if (lane_ == 4) refill();
    return buffer_[lane_++];
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vector normal_vector(Eigen::Index dim) {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  /// Integer uniform on [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  void refill() {
    buffer_ = Philox4x32::block(counter_, key_);
    if (++counter_[0] == 0) ++counter_[1];
    lane_ = 0;
  }

  Philox4x32::Key key_{};
  Philox4x32::Counter counter_{};
  Philox4x32::Counter buffer_{};
  int lane_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace guidelab
