#pragma once

#include <cstddef>
#include <functional>

namespace ganens {

/// Worker count: GANENS_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Exceptions from workers are rethrown on the
/// calling thread (the first one observed wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ganens
