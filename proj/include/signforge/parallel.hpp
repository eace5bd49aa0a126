#pragma once

#include <cstddef>
#include <functional>

namespace signforge {

// Worker cap from SIGNFORGE_THREADS, else the hardware concurrency (at least 1).
std::size_t thread_budget();

// Runs body(i) for i in [0, n) on up to thread_budget() threads. Bodies must
// write only to their own slot; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace signforge
