#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vmt {

inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> v{0};
  return v;
}

/// Process-wide worker count used by parallel_for (<=0 = hardware concurrency).
inline void set_thread_count(int n) { thread_count_slot() = n; }

inline int thread_count() {
  int v = thread_count_slot();
  if (v > 0) return v;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

/// Parallel loop over [begin, end). Each index must write only to its own
/// output slot; results are then identical for any worker count.
template <class F>
void parallel_for(int64_t begin, int64_t end, F&& body) {
  int64_t count = end - begin;
  if (count <= 0) return;
  int workers = int(std::min<int64_t>(thread_count(), count));
  if (workers <= 1) {
    for (int64_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<int64_t> next{begin};
  constexpr int64_t kChunk = 8;
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int64_t lo = next.fetch_add(kChunk);
        if (lo >= end) return;
        int64_t hi = std::min(end, lo + kChunk);
        try {
          for (int64_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace vmt
