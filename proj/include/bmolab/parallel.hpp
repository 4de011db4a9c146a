#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bmolab {

/// Caps the number of OpenMP workers used by the parallel kernels.
/// n <= 0 leaves the runtime default untouched.
inline void set_workers(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline constexpr std::int64_t kSumBlock = 4096;

/// Deterministic parallel sum of term(0..n-1): the index range is split into
/// fixed-size blocks, each block is summed serially left to right, and the
/// block results are combined in block order.  The result is bit-identical
/// for any thread count.
template <class Term>
double block_sum(std::int64_t n, Term&& term) {
    if (n <= 0) return 0.0;
    const std::int64_t nblocks = (n + kSumBlock - 1) / kSumBlock;
    if (nblocks == 1) {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i) s += term(i);
        return s;
    }
    std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nblocks; ++b) {
        const std::int64_t lo = b * kSumBlock;
        const std::int64_t hi = std::min(n, lo + kSumBlock);
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace bmolab
