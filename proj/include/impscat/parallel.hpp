#pragma once

#include <cstddef>
#include <functional>

namespace impscat {

/// Hardware concurrency, at least 1.
unsigned default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default_thread_count()).
/// The first exception thrown by any iteration is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace impscat
