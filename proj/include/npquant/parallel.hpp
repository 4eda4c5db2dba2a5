#pragma once

#include <cstdint>
#include <functional>

namespace npquant {

// Execution control for the data-parallel kernels. Every kernel stores its
// per-item results into preallocated slots and reduces serially in index
// order, so serial and OpenMP runs produce bit-identical output; the serial
// path doubles as the reference implementation in tests and benchmarks.

// 0 = use the OpenMP default; 1 = serial reference; n>1 = cap worker count.
void set_max_threads(int n);
int max_threads();

// Reads NPQUANT_THREADS once at startup unless set_max_threads was called.
int effective_threads();

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}  // namespace npquant
