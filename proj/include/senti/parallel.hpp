#ifndef SENTI_PARALLEL_HPP
#define SENTI_PARALLEL_HPP

#include <cstddef>

namespace senti {

// Global worker count for the OpenMP kernels. 1 = serial reference path,
// 0 = all hardware threads. Every parallel kernel in the project is written
// against a fixed reduction order, so changing this never changes output
// bytes, only wall time.
void set_threads(int n);
int threads();

// Effective OpenMP thread count for a loop of `work_items`.
int effective_threads(size_t work_items);

} // namespace senti

#endif
