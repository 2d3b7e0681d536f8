#pragma once

#include <functional>

namespace cmms {

// Worker cap for embarrassingly parallel loops. Reads CONFORMAL_MMS_THREADS
// once per call; unset or invalid falls back to hardware concurrency.
int thread_cap();

// Runs body(i) for i in [0, n). Work items must be independent; each writes
// only its own output slot, so results do not depend on the thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace cmms
