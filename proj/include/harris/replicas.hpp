#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace harris {

/// Runs `body(r)` for r in [0, count) on up to `workers` threads, in
/// contiguous blocks. Callers write results into slot r of a pre-sized
/// buffer, so the outcome does not depend on scheduling. The first exception
/// thrown by any replica is rethrown on the calling thread.
template <class Body>
void for_each_replica(std::uint64_t count, unsigned workers, Body&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(count, 1)));
  if (workers <= 1) {
    for (std::uint64_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::uint64_t block = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * block, hi = std::min(count, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t r = lo; r < hi; ++r) body(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace harris
