#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace flowlab {

/// Worker count used by every OpenMP kernel. 0 means "let OpenMP decide".
void set_thread_limit(int threads) noexcept;
int thread_limit() noexcept;

/// Reads FLOWLAB_THREADS (0 = auto). Malformed values are ignored.
void configure_threads_from_env() noexcept;

/// Threads actually handed to a `num_threads` clause.
int worker_count() noexcept;

/// Work is split into fixed-size chunks whose boundaries do not depend on the
/// thread count; chunk results are reduced in chunk order. This is what makes
/// the parallel kernels bit-identical across FLOWLAB_THREADS settings.
inline constexpr std::size_t kReductionChunk = 16;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kReductionChunk) noexcept {
  return (n + chunk - 1) / chunk;
}

/// OpenMP loop over [0, n). An exception thrown by `body` is captured and the
/// one from the lowest index is rethrown after the loop, so failures are
/// reported deterministically and never escape the parallel region.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  bool failed = false;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(worker_count()) reduction(|| : failed)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      failed = true;
    }
  }
  if (!failed) return;
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace flowlab
