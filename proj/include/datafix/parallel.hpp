#pragma once

#include <cstddef>
#include <functional>

namespace datafix {

/// Worker count used by parallel_for. Resolution order: the last value
/// passed to set_num_threads, the DATAFIX_THREADS environment variable,
/// then std::thread::hardware_concurrency().
std::size_t num_threads();
void set_num_threads(std::size_t n);

/// Runs body(i) for i in [0, n) on up to num_threads() workers. The body
/// must only write to state owned by index i so results do not depend on
/// scheduling. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace datafix
