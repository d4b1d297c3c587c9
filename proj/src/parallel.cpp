#include "flowlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace flowlab {

namespace {
std::atomic<int> g_thread_limit{0};
}

void set_thread_limit(int threads) noexcept { g_thread_limit = threads < 0 ? 0 : threads; }

int thread_limit() noexcept { return g_thread_limit; }

void configure_threads_from_env() noexcept {
  const char* raw = std::getenv("FLOWLAB_THREADS");
  if (raw == nullptr) return;
  try {
    set_thread_limit(std::stoi(raw));
  } catch (...) {
  }
}

int worker_count() noexcept {
  const int limit = g_thread_limit;
  return limit > 0 ? limit : omp_get_max_threads();
}

}  // namespace flowlab
