#include "levytree/simd/gauss.hpp"

#include <atomic>

#include "levytree/errors.hpp"

namespace levytree::simd {

void gauss_fill_scalar(uint64_t, uint64_t, uint64_t, std::size_t, double*);
void gauss_fill_avx2(uint64_t, uint64_t, uint64_t, std::size_t, double*);

namespace {

std::atomic<GaussBackend> g_backend{GaussBackend::auto_detect};

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void set_gauss_backend(GaussBackend backend) {
  if (backend == GaussBackend::avx2 && !avx2_available())
    throw ConfigError("avx2 backend requested but not available on this cpu");
  g_backend.store(backend);
}

GaussBackend active_gauss_backend() {
  GaussBackend b = g_backend.load();
  if (b == GaussBackend::auto_detect)
    return avx2_available() ? GaussBackend::avx2 : GaussBackend::scalar;
  return b;
}

void gauss_fill_pairs(uint64_t seed, uint64_t stream, uint64_t base_pair, std::size_t npairs,
                      double* out) {
  if (active_gauss_backend() == GaussBackend::avx2)
    gauss_fill_avx2(seed, stream, base_pair, npairs, out);
  else
    gauss_fill_scalar(seed, stream, base_pair, npairs, out);
}

}  // namespace levytree::simd
