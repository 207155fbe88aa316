//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>

namespace cslme {

/// Worker cap: CSLME_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int max_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 means
/// max_threads()). Work is handed out through an atomic counter, so callers
/// must write results into slot i only. The first exception thrown by any
/// body is rethrown after all workers joined.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace cslme
