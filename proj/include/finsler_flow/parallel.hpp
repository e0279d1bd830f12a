#pragma once

#include <cstddef>
#include <functional>

namespace finsler_flow {

/// Worker count: FINSLER_FLOW_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, count) on up to worker_count() threads. Each
/// index is visited exactly once; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace finsler_flow
