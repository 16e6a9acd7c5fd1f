#pragma once

#include <cstddef>
#include <functional>

namespace trc {

// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Indices are split into contiguous chunks; fn must only write
// to slot i of its output so results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

} // namespace trc
