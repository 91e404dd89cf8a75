#pragma once

#include <cstddef>
#include <functional>

namespace evolveq {

/// Runs body(i) for i in [0, count) on up to `threads` worker threads.
///
/// Each index runs exactly once; callers write results into slot i, so the
/// outcome does not depend on scheduling. If any call throws, the exception
/// of the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace evolveq
