#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tsrnn {

// Runs fn(job) for job in [0, jobs). Job results must only depend on the job
// index, so scheduling cannot change any output. threads <= 1 runs inline.
inline void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  if (jobs <= 0) return;
  if (threads <= 1 || jobs == 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  const int workers = std::min(threads, jobs);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tsrnn
