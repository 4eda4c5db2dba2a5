#include "npquant/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace npquant {

namespace {
std::atomic<int> g_max_threads{-1};  // -1 = not set, fall back to env

int env_threads() {
  const char* v = std::getenv("NPQUANT_THREADS");
  if (!v) return 0;
  const int n = std::atoi(v);
  return n > 0 ? n : 0;
}
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() { return g_max_threads.load(); }

int effective_threads() {
  const int m = g_max_threads.load();
  if (m >= 0) return m;
  return env_threads();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  const int cap = effective_threads();
  if (cap == 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  if (cap > 1) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(cap)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace npquant
