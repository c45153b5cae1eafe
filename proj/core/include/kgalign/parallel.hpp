#pragma once

#include <cstdint>
#include <functional>

namespace kgalign {

// Runs fn over [0, n) split into contiguous chunks, one per worker. Results
// must not depend on the chunking: each index writes only its own outputs.
// threads <= 1 runs inline.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t begin, std::int64_t end)>& fn);

}  // namespace kgalign
