#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pdmpclt {

// Replica-level parallelism: tasks write into disjoint slots indexed by their
// id, so results are independent of worker count and scheduling. All
// reductions downstream use pairwise_sum on the slot vectors.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = 0)
      : workers_(workers > 0 ? workers
                             : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))) {}

  int workers() const { return workers_; }

  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) const {
    if (count == 0) return;
    const int nthreads = static_cast<int>(std::min<std::size_t>(count, static_cast<std::size_t>(workers_)));
    if (nthreads <= 1) {
      for (std::size_t i = 0; i < count; ++i) body(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nthreads) - 1);
    for (int t = 1; t < nthreads; ++t) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  }

 private:
  int workers_;
};

}  // namespace pdmpclt
