#pragma once

#include "volatix/kernels.hpp"

namespace volatix::kernels::detail {

extern const KernelTable scalar_table;
#if defined(VOLATIX_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(VOLATIX_HAVE_NEON)
extern const KernelTable neon_table;
#endif

// exp() is clamped here in every backend so that the vector paths and the
// scalar reference agree on the underflow edge.
inline constexpr double kExpLow = -708.0;
inline constexpr double kExpHigh = 709.0;

}  // namespace volatix::kernels::detail
