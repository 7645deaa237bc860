#pragma once

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define REIL_HAS_MXCSR 1
#endif

namespace reil::nn {

/// Flushes subnormal floats to zero for the lifetime of the scope. Adam's
/// second-moment estimates drift into the subnormal range in F32 and make
/// every update several times slower otherwise.
class FlushToZeroScope {
 public:
  FlushToZeroScope() {
#ifdef REIL_HAS_MXCSR
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~FlushToZeroScope() {
#ifdef REIL_HAS_MXCSR
    _mm_setcsr(saved_);
#endif
  }
  FlushToZeroScope(const FlushToZeroScope&) = delete;
  FlushToZeroScope& operator=(const FlushToZeroScope&) = delete;

 private:
  unsigned saved_ = 0;
};

}  // namespace reil::nn
