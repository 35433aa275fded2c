#pragma once

#include <cstddef>
#include <functional>

namespace tailica {

/// Worker cap from TAILICA_THREADS (0 or unset: hardware concurrency).
unsigned worker_count();

/// Runs body(0) .. body(count - 1) on up to worker_count() threads. Each index
/// runs exactly once; callers must make bodies independent.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tailica
