#pragma once

#include <algorithm>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace ergo {

// Parallel loop over [0, n). Each index must own its output slot; callers
// reduce over slots afterwards in index order, which keeps every result
// identical for any thread count. threads <= 1 runs the plain serial loop
// (the reference path used by the determinism tests and the benchmark).
template <class F>
void par_for(long long n, int threads, F&& body) {
  if (threads <= 1) {
    for (long long i = 0; i < n; ++i) body(i);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < n; ++i) body(i);
#else
  for (long long i = 0; i < n; ++i) body(i);
#endif
}

inline int hardware_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ergo
