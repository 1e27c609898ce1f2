#pragma once

#include <cstddef>
#include <functional>

namespace seqsel {

/// Upper bound on worker threads used by parallel sections. 0 restores the
/// default (hardware concurrency).
void set_max_threads(int threads);
int max_threads();

/// Run body(i) for i in [begin, end). Each index is visited exactly once;
/// callers write results into per-index slots so output does not depend on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

} // namespace seqsel
