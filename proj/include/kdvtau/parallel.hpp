#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kdvtau {

/// Worker count: KDVTAU_THREADS when set to a positive number, hardware otherwise.
inline int thread_count() {
  if (const char* env = std::getenv("KDVTAU_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

/// Run fn(i) for i = 0..n-1 on up to thread_count() workers.  Each call must write
/// its result into a preallocated slot for index i; the caller then reduces the
/// slots in index order, so the outcome does not depend on the thread count or on
/// scheduling.  The first exception thrown by any call is rethrown here.
template <class F>
void parallel_for(int n, F&& fn) {
  if (n <= 0) return;
  int nt = std::min(thread_count(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!failed) {
            err = std::current_exception();
            failed = true;
          }
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failed) std::rethrow_exception(err);
}

}  // namespace kdvtau
