#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace levytree::simd {

enum class GaussBackend { auto_detect, scalar, avx2 };

// Fills out[0..2*npairs) with standard Gaussians. Pair j (outputs 2j, 2j+1)
// is a pure function of (seed, stream, base_pair + j): one Philox4x32-10
// block feeding a Box-Muller transform built on the shared vecmath kernels.
// Scalar and AVX2 backends produce bit-identical output.
void gauss_fill_pairs(uint64_t seed, uint64_t stream, uint64_t base_pair, std::size_t npairs,
                      double* out);

void set_gauss_backend(GaussBackend backend);
GaussBackend active_gauss_backend();
bool avx2_available();

// Buffered sequential reader over the counter-indexed Gaussian sequence of
// one (seed, stream). Chunked refills do not change the values drawn.
class GaussStream {
 public:
  GaussStream(uint64_t seed, uint64_t stream, std::size_t chunk_pairs = 2048)
      : seed_(seed), stream_(stream), buf_(2 * chunk_pairs), pos_(buf_.size()) {}

  double next() {
    if (pos_ >= buf_.size()) refill();
    return buf_[pos_++];
  }

  uint64_t consumed() const { return next_pair_ * 2 - (buf_.size() - pos_); }

 private:
  void refill() {
    gauss_fill_pairs(seed_, stream_, next_pair_, buf_.size() / 2, buf_.data());
    next_pair_ += buf_.size() / 2;
    pos_ = 0;
  }

  uint64_t seed_, stream_;
  uint64_t next_pair_ = 0;
  std::vector<double> buf_;
  std::size_t pos_;
};

}  // namespace levytree::simd
