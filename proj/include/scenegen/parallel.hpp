#pragma once

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scenegen {

// OpenMP-backed index loop. Work items must be independent; callers get
// identical results for any thread count (each item writes its own slot).
// threads == 1 runs the plain serial loop; threads <= 0 uses the OpenMP
// default.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
#ifdef _OPENMP
  if (threads != 1 && n > 1) {
    std::exception_ptr err = nullptr;
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical(scenegen_parallel_for_err)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#else
  (void)threads;
#endif
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace scenegen
