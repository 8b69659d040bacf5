#pragma once

#include <cstddef>
#include <functional>

namespace bigrasp {

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Work items must write to disjoint outputs; results are therefore
// independent of the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace bigrasp
