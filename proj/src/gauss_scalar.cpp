#include "gauss_impl.hpp"

namespace levytree::simd {

void gauss_fill_scalar(uint64_t seed, uint64_t stream, uint64_t base_pair, std::size_t npairs,
                       double* out) {
  gauss_fill_impl<ScalarPhilox>(seed, stream, base_pair, npairs, out);
}

}  // namespace levytree::simd
