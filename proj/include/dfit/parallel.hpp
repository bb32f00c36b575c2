#pragma once

#include <cstddef>
#include <functional>

namespace dfit {

/// Upper bound on worker threads used by grid loops (>= 1).
void set_worker_count(unsigned n);
unsigned worker_count();

/// Calls body(chunk_index, begin, end) for consecutive chunks of [0, n).
/// Chunk boundaries depend only on n and chunk_size, never on the worker
/// count, so per-chunk partial sums reduced in chunk order are bit-identical
/// for any number of threads.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) { return (n + chunk_size - 1) / chunk_size; }

}  // namespace dfit
