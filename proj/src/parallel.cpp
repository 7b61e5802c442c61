#include "senti/parallel.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace senti {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int threads() { return g_threads.load(); }

int effective_threads(size_t work_items) {
    int n = g_threads.load();
#ifdef _OPENMP
    if (n <= 0) n = omp_get_max_threads();
#else
    if (n <= 0) n = 1;
#endif
    if (work_items < static_cast<size_t>(n)) n = static_cast<int>(work_items);
    return std::max(1, n);
}

} // namespace senti
