#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace textrobust {

// threads <= 0 means "use the hardware default".
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Data-parallel loop over examples. threads == 1 is the serial reference
// path; the OpenMP path must only ever write to per-index slots so the
// schedule cannot change output bytes. The first exception thrown by any
// iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
    threads = resolve_threads(threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
#ifdef _OPENMP
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

}  // namespace textrobust
