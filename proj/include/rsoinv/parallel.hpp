#pragma once

#include <cstddef>
#include <functional>

namespace rsoinv {

/// Worker count: RSO_INVERT_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. Indices are
/// claimed dynamically, so body must not depend on execution order. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rsoinv
