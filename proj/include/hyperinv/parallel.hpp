#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperinv {

/// Runs task(i) for i in [0, count) on up to `threads` workers and rethrows
/// the first exception after all workers finish.
template <typename Task>
void parallel_for(int count, int threads, Task&& task) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hyperinv
