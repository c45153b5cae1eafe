#include "kgalign/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace kgalign {

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const auto workers =
      static_cast<std::int64_t>(std::max(1, threads));
  if (workers == 1 || n == 1) {
    fn(0, n);
    return;
  }
  const std::int64_t used = std::min(workers, n);
  const std::int64_t chunk = (n + used - 1) / used;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(used));
  pool.reserve(static_cast<std::size_t>(used));
  for (std::int64_t w = 0; w < used; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace kgalign
