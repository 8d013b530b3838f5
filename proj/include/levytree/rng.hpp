#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace levytree {

// Philox 4x32-10 block function (Salmon et al., SC'11). Counter-based: the
// draw sequence is a pure function of (key, counter), so replicate streams
// can be split without jump-ahead state.
struct Philox4x32 {
  static constexpr uint32_t kM0 = 0xD2511F53u;
  static constexpr uint32_t kM1 = 0xCD9E8D57u;
  static constexpr uint32_t kW0 = 0x9E3779B9u;
  static constexpr uint32_t kW1 = 0xBB67AE85u;

  static inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                              std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      uint64_t p0 = static_cast<uint64_t>(kM0) * ctr[0];
      uint64_t p1 = static_cast<uint64_t>(kM1) * ctr[2];
      uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
      uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

// One reproducible stream of draws: identical (seed, stream) gives an
// identical sequence; distinct streams are statistically independent.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }
  uint64_t position() const { return ctr_; }

  uint64_t next_u64() {
    if (buf_pos_ >= 2) refill();
    return buf_[buf_pos_++];
  }

  // Uniform on (0,1), never returns 0 or 1.
  double uniform() {
    return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double gaussian() {
    if (have_gauss_) {
      have_gauss_ = false;
      return gauss_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double c = std::cos(2.0 * M_PI * u2), s = std::sin(2.0 * M_PI * u2);
    gauss_ = r * s;
    have_gauss_ = true;
    return r * c;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  uint64_t poisson(double mean);
  double gamma(double shape);  // unit scale, shape > 0
  double inverse_gaussian(double mu, double lambda);

 private:
  void refill() {
    auto out = Philox4x32::block(
        {static_cast<uint32_t>(ctr_), static_cast<uint32_t>(ctr_ >> 32),
         static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)},
        {static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32)});
    buf_[0] = (static_cast<uint64_t>(out[1]) << 32) | out[0];
    buf_[1] = (static_cast<uint64_t>(out[3]) << 32) | out[2];
    buf_pos_ = 0;
    ++ctr_;
  }

  uint64_t seed_, stream_;
  uint64_t ctr_ = 0;
  uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
  double gauss_ = 0.0;
  bool have_gauss_ = false;
};

}  // namespace levytree
