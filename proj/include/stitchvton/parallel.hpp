#pragma once

#include <cstddef>
#include <functional>

namespace stitchvton {

/// Worker count: STITCHVTON_THREADS if set and > 0, else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// runs exactly once; the first exception thrown is rethrown after joining.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stitchvton
