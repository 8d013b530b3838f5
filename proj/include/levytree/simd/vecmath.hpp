#pragma once

// Branch-free log / sincos kernels shared by the scalar and AVX2 Gaussian
// fill paths. All polynomial steps use explicit fused multiply-adds so both
// backends round identically; TUs including this are built with
// -ffp-contract=off.

#include <cmath>
#include <cstdint>
#include <cstring>

#ifdef LEVYTREE_VECMATH_AVX2
#include <immintrin.h>
#endif

namespace levytree::simd {

struct ScalarLane {
  static constexpr int width = 1;
  using f64 = double;
  using i64 = uint64_t;

  static f64 splat(double x) { return x; }
  static i64 splat_i(uint64_t x) { return x; }
  static f64 add(f64 a, f64 b) { return a + b; }
  static f64 sub(f64 a, f64 b) { return a - b; }
  static f64 mul(f64 a, f64 b) { return a * b; }
  static f64 div(f64 a, f64 b) { return a / b; }
  static f64 fma(f64 a, f64 b, f64 c) { return std::fma(a, b, c); }
  static f64 sqrt(f64 a) { return std::sqrt(a); }
  static f64 neg(f64 a) { return -a; }
  static i64 f2i(f64 a) {
    uint64_t r;
    std::memcpy(&r, &a, 8);
    return r;
  }
  static f64 i2f(i64 a) {
    double r;
    std::memcpy(&r, &a, 8);
    return r;
  }
  static i64 and_i(i64 a, i64 b) { return a & b; }
  static i64 or_i(i64 a, i64 b) { return a | b; }
  template <int N>
  static i64 srl(i64 a) { return a >> N; }
  static i64 add_i(i64 a, i64 b) { return a + b; }
  static i64 gt_i(i64 a, i64 b) {
    return (static_cast<int64_t>(a) > static_cast<int64_t>(b)) ? ~0ull : 0ull;
  }
  static f64 select(i64 mask, f64 a, f64 b) { return mask ? a : b; }
  static f64 rint(f64 a) { return std::nearbyint(a); }
};

#ifdef LEVYTREE_VECMATH_AVX2
struct Avx2Lane {
  static constexpr int width = 4;
  using f64 = __m256d;
  using i64 = __m256i;

  static f64 splat(double x) { return _mm256_set1_pd(x); }
  static i64 splat_i(uint64_t x) { return _mm256_set1_epi64x(static_cast<long long>(x)); }
  static f64 add(f64 a, f64 b) { return _mm256_add_pd(a, b); }
  static f64 sub(f64 a, f64 b) { return _mm256_sub_pd(a, b); }
  static f64 mul(f64 a, f64 b) { return _mm256_mul_pd(a, b); }
  static f64 div(f64 a, f64 b) { return _mm256_div_pd(a, b); }
  static f64 fma(f64 a, f64 b, f64 c) { return _mm256_fmadd_pd(a, b, c); }
  static f64 sqrt(f64 a) { return _mm256_sqrt_pd(a); }
  static f64 neg(f64 a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }
  static i64 f2i(f64 a) { return _mm256_castpd_si256(a); }
  static f64 i2f(i64 a) { return _mm256_castsi256_pd(a); }
  static i64 and_i(i64 a, i64 b) { return _mm256_and_si256(a, b); }
  static i64 or_i(i64 a, i64 b) { return _mm256_or_si256(a, b); }
  template <int N>
  static i64 srl(i64 a) { return _mm256_srli_epi64(a, N); }
  static i64 add_i(i64 a, i64 b) { return _mm256_add_epi64(a, b); }
  static i64 gt_i(i64 a, i64 b) { return _mm256_cmpgt_epi64(a, b); }
  static f64 select(i64 mask, f64 a, f64 b) {
    return _mm256_blendv_pd(b, a, _mm256_castsi256_pd(mask));
  }
  static f64 rint(f64 a) {
    return _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }
};
#endif

// 1.5 * 2^52; adding small integers to its bit pattern round-trips exactly.
inline constexpr double kShifter = 6755399441055744.0;

// (bits >> 12) * 2^-52 + 2^-53, uniform on (0,1). The 2^52 bit trick needs
// the payload to stay below 52 bits.
template <class L>
typename L::f64 u64_to_unit(typename L::i64 bits) {
  typename L::i64 mant = L::template srl<12>(bits);
  typename L::i64 magic = L::splat_i(0x4330000000000000ull);  // 2^52
  typename L::f64 d = L::sub(L::i2f(L::or_i(mant, magic)), L::splat(4503599627370496.0));
  return L::fma(d, L::splat(0x1.0p-52), L::splat(0x1.0p-53));
}

// Natural log for normal x in (0, 1].
template <class L>
typename L::f64 log_unit(typename L::f64 x) {
  using f64 = typename L::f64;
  using i64 = typename L::i64;
  i64 bits = L::f2i(x);
  i64 expo_bits = L::and_i(L::template srl<52>(bits), L::splat_i(0x7FF));
  i64 mant_bits = L::or_i(L::and_i(bits, L::splat_i(0x000FFFFFFFFFFFFFull)),
                          L::splat_i(0x3FF0000000000000ull));
  f64 m = L::i2f(mant_bits);  // in [1, 2)
  f64 e = L::sub(L::i2f(L::add_i(expo_bits, L::f2i(L::splat(kShifter)))),
                 L::add(L::splat(kShifter), L::splat(1023.0)));
  // Fold m > sqrt(2) down one octave.
  i64 big = L::gt_i(mant_bits, L::splat_i(0x3FF6A09E667F3BCDull));
  m = L::select(big, L::mul(m, L::splat(0.5)), m);
  e = L::select(big, L::add(e, L::splat(1.0)), e);

  f64 t = L::div(L::sub(m, L::splat(1.0)), L::add(m, L::splat(1.0)));
  f64 w = L::mul(t, t);
  // 2*atanh(t) = 2t (1 + w/3 + w^2/5 + ...)
  f64 p = L::splat(1.0 / 15.0);
  p = L::fma(p, w, L::splat(1.0 / 13.0));
  p = L::fma(p, w, L::splat(1.0 / 11.0));
  p = L::fma(p, w, L::splat(1.0 / 9.0));
  p = L::fma(p, w, L::splat(1.0 / 7.0));
  p = L::fma(p, w, L::splat(1.0 / 5.0));
  p = L::fma(p, w, L::splat(1.0 / 3.0));
  p = L::fma(p, w, L::splat(1.0));
  f64 log_m = L::mul(L::add(t, t), p);
  const double ln2_hi = 6.93147180369123816490e-01;
  const double ln2_lo = 1.90821492927058770002e-10;
  f64 r = L::fma(e, L::splat(ln2_hi), log_m);
  return L::fma(e, L::splat(ln2_lo), r);
}

// sin and cos of 2*pi*u for u in [0, 1).
template <class L>
void sincos_2pi(typename L::f64 u, typename L::f64& s_out, typename L::f64& c_out) {
  using f64 = typename L::f64;
  using i64 = typename L::i64;
  f64 t4 = L::mul(u, L::splat(4.0));
  f64 qd = L::rint(t4);
  f64 r = L::mul(L::sub(t4, qd), L::splat(M_PI_2));  // in [-pi/4, pi/4]
  i64 q = L::and_i(L::f2i(L::add(qd, L::splat(kShifter))), L::splat_i(3));

  f64 z = L::mul(r, r);
  // fdlibm sin/cos kernels
  f64 sp = L::splat(1.58969099521155010221e-10);
  sp = L::fma(sp, z, L::splat(-2.50507602534068634195e-08));
  sp = L::fma(sp, z, L::splat(2.75573137070700676789e-06));
  sp = L::fma(sp, z, L::splat(-1.98412698298579493134e-04));
  sp = L::fma(sp, z, L::splat(8.33333333332248946124e-03));
  sp = L::fma(sp, z, L::splat(-1.66666666666666324348e-01));
  f64 s = L::fma(L::mul(r, z), sp, r);

  f64 cp = L::splat(-1.13596475577881948265e-11);
  cp = L::fma(cp, z, L::splat(2.08757232129817482790e-09));
  cp = L::fma(cp, z, L::splat(-2.75573143513906633035e-07));
  cp = L::fma(cp, z, L::splat(2.48015872894767294178e-05));
  cp = L::fma(cp, z, L::splat(-1.38888888888741095749e-03));
  cp = L::fma(cp, z, L::splat(4.16666666666666019037e-02));
  f64 hz = L::mul(z, L::splat(0.5));
  f64 w = L::sub(L::splat(1.0), hz);
  f64 c = L::add(w, L::add(L::sub(L::sub(L::splat(1.0), w), hz), L::mul(L::mul(z, z), cp)));

  // (sin, cos) <- quadrant rotation of (s, c)
  i64 odd = L::gt_i(L::and_i(q, L::splat_i(1)), L::splat_i(0));
  f64 sb = L::select(odd, c, s);
  f64 cb = L::select(odd, s, c);
  i64 sflip = L::gt_i(q, L::splat_i(1));                                    // q in {2,3}
  i64 cflip = L::gt_i(L::and_i(L::add_i(q, L::splat_i(1)), L::splat_i(2)),  // q in {1,2}
                      L::splat_i(0));
  s_out = L::select(sflip, L::neg(sb), sb);
  c_out = L::select(cflip, L::neg(cb), cb);
}

}  // namespace levytree::simd
