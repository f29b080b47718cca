#pragma once

#include <cstddef>
#include <functional>

namespace covtest {

// Runs fn(i) for i in [0, n). Worker w takes indices w, w + workers, ... so
// the index-to-work mapping never depends on scheduling; callers write
// results into index-keyed slots. The first exception (lowest worker id) is
// rethrown after all workers join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace covtest
