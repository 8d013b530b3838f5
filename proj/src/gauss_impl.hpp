#pragma once

// Backend-generic body of gauss_fill_pairs. Each backend TU instantiates
// gauss_fill_impl with its lane type and a matching Philox block producer.

#include <cstddef>
#include <cstdint>

#include "levytree/rng.hpp"
#include "levytree/simd/vecmath.hpp"

namespace levytree::simd {

// Marks the Gaussian counter space so it never overlaps RngStream's counters
// on the same (seed, stream): RngStream uses ctr words {seq, stream},
// gauss_fill uses {seq, stream ^ kGaussSpace}.
inline constexpr uint64_t kGaussSpace = 0x9E3779B97F4A7C15ull;

struct ScalarPhilox {
  using L = ScalarLane;
  // Produces the two packed 64-bit words of one Philox block per call.
  static void blocks(uint64_t seed, uint64_t stream, uint64_t pair, L::i64& w01, L::i64& w23) {
    uint64_t sp = stream ^ kGaussSpace;
    auto out = Philox4x32::block(
        {static_cast<uint32_t>(pair), static_cast<uint32_t>(pair >> 32),
         static_cast<uint32_t>(sp), static_cast<uint32_t>(sp >> 32)},
        {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)});
    w01 = (static_cast<uint64_t>(out[1]) << 32) | out[0];
    w23 = (static_cast<uint64_t>(out[3]) << 32) | out[2];
  }
  static void store_pair(double* out, L::f64 g0, L::f64 g1) {
    out[0] = g0;
    out[1] = g1;
  }
};

template <class P>
void gauss_fill_impl(uint64_t seed, uint64_t stream, uint64_t base_pair, std::size_t npairs,
                     double* out) {
  using L = typename P::L;
  constexpr int W = L::width;
  std::size_t j = 0;
  for (; j + W <= npairs; j += W) {
    typename L::i64 w01, w23;
    P::blocks(seed, stream, base_pair + j, w01, w23);
    typename L::f64 u1 = u64_to_unit<L>(w01);
    typename L::f64 u2 = u64_to_unit<L>(w23);
    typename L::f64 r = L::sqrt(L::mul(L::splat(-2.0), log_unit<L>(u1)));
    typename L::f64 s, c;
    sincos_2pi<L>(u2, s, c);
    P::store_pair(out + 2 * j, L::mul(r, c), L::mul(r, s));
  }
  // Tail pairs one at a time through the scalar path (identical values).
  for (; j < npairs; ++j) {
    ScalarLane::i64 w01, w23;
    ScalarPhilox::blocks(seed, stream, base_pair + j, w01, w23);
    double u1 = u64_to_unit<ScalarLane>(w01);
    double u2 = u64_to_unit<ScalarLane>(w23);
    double r = ScalarLane::sqrt(-2.0 * log_unit<ScalarLane>(u1));
    double s, c;
    sincos_2pi<ScalarLane>(u2, s, c);
    out[2 * j] = r * c;
    out[2 * j + 1] = r * s;
  }
}

}  // namespace levytree::simd
