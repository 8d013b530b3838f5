#define LEVYTREE_VECMATH_AVX2 1

#include <immintrin.h>

#include "gauss_impl.hpp"

namespace levytree::simd {

namespace {

// Four Philox4x32-10 blocks in structure-of-arrays form: each __m256i holds
// one 32-bit word (zero-extended to 64) for four consecutive counters.
struct Avx2Philox {
  using L = Avx2Lane;

  static void blocks(uint64_t seed, uint64_t stream, uint64_t pair, __m256i& w01, __m256i& w23) {
    const __m256i mask32 = _mm256_set1_epi64x(0xFFFFFFFFll);
    uint64_t sp = stream ^ kGaussSpace;
    __m256i ctr64 = _mm256_set_epi64x(static_cast<long long>(pair + 3),
                                      static_cast<long long>(pair + 2),
                                      static_cast<long long>(pair + 1),
                                      static_cast<long long>(pair));
    __m256i c0 = _mm256_and_si256(ctr64, mask32);
    __m256i c1 = _mm256_srli_epi64(ctr64, 32);
    __m256i c2 = _mm256_set1_epi64x(static_cast<long long>(sp & 0xFFFFFFFFull));
    __m256i c3 = _mm256_set1_epi64x(static_cast<long long>(sp >> 32));
    __m256i k0 = _mm256_set1_epi64x(static_cast<long long>(seed & 0xFFFFFFFFull));
    __m256i k1 = _mm256_set1_epi64x(static_cast<long long>(seed >> 32));
    const __m256i m0 = _mm256_set1_epi64x(static_cast<long long>(Philox4x32::kM0));
    const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(Philox4x32::kM1));
    const __m256i w0 = _mm256_set1_epi64x(static_cast<long long>(Philox4x32::kW0));
    const __m256i w1 = _mm256_set1_epi64x(static_cast<long long>(Philox4x32::kW1));
    for (int round = 0; round < 10; ++round) {
      __m256i p0 = _mm256_mul_epu32(c0, m0);
      __m256i p1 = _mm256_mul_epu32(c2, m1);
      __m256i hi0 = _mm256_srli_epi64(p0, 32);
      __m256i lo0 = _mm256_and_si256(p0, mask32);
      __m256i hi1 = _mm256_srli_epi64(p1, 32);
      __m256i lo1 = _mm256_and_si256(p1, mask32);
      c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), k0);
      c1 = lo1;
      c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), k1);
      c3 = lo0;
      k0 = _mm256_and_si256(_mm256_add_epi64(k0, w0), mask32);
      k1 = _mm256_and_si256(_mm256_add_epi64(k1, w1), mask32);
    }
    w01 = _mm256_or_si256(_mm256_slli_epi64(c1, 32), c0);
    w23 = _mm256_or_si256(_mm256_slli_epi64(c3, 32), c2);
  }

  static void store_pair(double* out, __m256d g0, __m256d g1) {
    __m256d t0 = _mm256_unpacklo_pd(g0, g1);  // a0 b0 a2 b2
    __m256d t1 = _mm256_unpackhi_pd(g0, g1);  // a1 b1 a3 b3
    _mm256_storeu_pd(out, _mm256_permute2f128_pd(t0, t1, 0x20));
    _mm256_storeu_pd(out + 4, _mm256_permute2f128_pd(t0, t1, 0x31));
  }
};

}  // namespace

void gauss_fill_avx2(uint64_t seed, uint64_t stream, uint64_t base_pair, std::size_t npairs,
                     double* out) {
  gauss_fill_impl<Avx2Philox>(seed, stream, base_pair, npairs, out);
}

}  // namespace levytree::simd
