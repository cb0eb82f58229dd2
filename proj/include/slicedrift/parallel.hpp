#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slicedrift {

// OpenMP wrapper for the data-parallel inner loops (slice mapping, candidate
// evaluation, experiment grid cells). Every parallelized loop in this library
// writes to disjoint slots or accumulates commutative integer counts, so
// results are identical for any thread count, including the serial fallback.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        body(static_cast<std::size_t>(i));
    }
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace slicedrift
