#pragma once

#include <cstddef>
#include <functional>

namespace steerlab {

/// Worker count used by parallelFor. Defaults to 1.
std::size_t threadCount();
/// Throws ConfigError for 0.
void setThreadCount(std::size_t n);

/// Calls body(i) for i in [0, n), splitting the range into contiguous chunks,
/// one per worker. Bodies must write disjoint memory; results then do not
/// depend on the thread count.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace steerlab
