#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace llambo {

// Execution policy for the data-parallel kernels.  Every kernel has a serial
// path that is the reference implementation; the parallel path must produce
// bit-identical results (work is partitioned per index, never reduced across
// threads in floating point).
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class Body>
void parallel_for(Exec policy, std::ptrdiff_t n, const Body& body) {
#ifdef _OPENMP
  if (policy == Exec::parallel && n > 1) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
#else
  (void)policy;
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

}  // namespace llambo
