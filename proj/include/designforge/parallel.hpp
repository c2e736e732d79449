#pragma once

#include <cstddef>
#include <functional>

namespace designforge {

// Worker count: DESIGNFORGE_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n). Callers write results by index, so the outcome
// does not depend on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace designforge
