#pragma once

#include <cstddef>
#include <functional>

namespace cavitykit {

// Runs fn(i) for i in [0, n) across worker threads. Worker count is capped by
// the CAVITY_KIT_THREADS environment variable (1 disables threading). Work is
// split statically so results are written to fixed slots; outputs are
// independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

int worker_count();

}  // namespace cavitykit
