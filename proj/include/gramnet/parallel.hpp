#pragma once

#include <cstddef>
#include <functional>

namespace gramnet {

/// Run fn(i) for every i in [0, count) on up to `threads` workers
/// (0 = hardware concurrency). Blocks until all items finish; if any item
/// threw, rethrows the exception of the lowest index so failures are
/// deterministic regardless of scheduling.
void parallel_for_index(std::size_t count, int threads,
                        const std::function<void(std::size_t)>& fn);

} // namespace gramnet
