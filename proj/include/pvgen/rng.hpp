#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace pvgen {

// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57;
  static constexpr std::uint32_t kW0 = 0x9E3779B9;
  static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

// Counter-based random stream keyed by (seed, sample index, stage). Two streams
// with any differing coordinate are independent, and a stream's output never
// depends on which thread draws it. Distributions are implemented here rather
// than taken from <random> so results are identical across standard libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t sample_index, std::uint32_t stage)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        sample_lo_(static_cast<std::uint32_t>(sample_index)),
        sample_hi_(static_cast<std::uint32_t>(sample_index >> 32)),
        stage_(stage) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (cursor_ == 4) refill();
    const std::uint64_t hi = buffer_[cursor_];
    const std::uint64_t lo = buffer_[cursor_ + 1];
    cursor_ += 2;
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n), rejection-sampled.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return sd == 0.0 ? mean : mean + sd * normal(); }

 private:
  void refill() {
    buffer_ = Philox4x32::block({block_, stage_, sample_lo_, sample_hi_}, key_);
    ++block_;
    cursor_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t sample_lo_;
  std::uint32_t sample_hi_;
  std::uint32_t stage_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int cursor_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pvgen
