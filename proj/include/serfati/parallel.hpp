#pragma once

#include <cstddef>
#include <functional>

namespace serfati {

/// Worker count used by parallel_for. Defaults to SERFATI_THREADS or the
/// hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Calls f(i) for i in [0, n). Each index is handled by exactly one worker,
/// so per-index writes are deterministic. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

/// Static contiguous partition: f(begin, end, worker).
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& f);

}  // namespace serfati
