#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace warpsmooth {

// Index-driven worker pool.  Results are gathered in task-index order, so
// reductions over the returned vector are bit-reproducible regardless of the
// worker count.  jobs == 1 runs inline.
class TaskPool {
 public:
  explicit TaskPool(int jobs = 1) : jobs_(jobs < 1 ? 1 : jobs) {}

  int jobs() const { return jobs_; }

  template <typename R>
  std::vector<R> map_indexed(int count, const std::function<R(int)>& fn) const {
    std::vector<R> results(count);
    if (count == 0) return results;
    if (jobs_ == 1 || count == 1) {
      for (int i = 0; i < count; ++i) results[i] = fn(i);
      return results;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          results[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    const int n_threads = std::min(jobs_, count);
    threads.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
  }

  void for_indexed(int count, const std::function<void(int)>& fn) const {
    map_indexed<char>(count, [&](int i) {
      fn(i);
      return char(0);
    });
  }

 private:
  int jobs_ = 1;
};

}  // namespace warpsmooth
