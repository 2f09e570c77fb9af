#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tcsim {

inline int hardware_jobs() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Data-parallel map over [0, n). jobs <= 1 runs the serial reference path;
// otherwise iterations are distributed over OpenMP threads. The callable must
// write only to its own index so results are identical for any jobs value.
template <typename Fn>
void par_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

} // namespace tcsim
