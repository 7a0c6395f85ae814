#include "tomonet/threads.hpp"

#include <atomic>
#include <thread>
#include <vector>

#include "tomonet/errors.hpp"

namespace tomonet {

namespace {
std::atomic<int> g_threads{1};
// Nested parallel regions run serially so worker counts never multiply.
thread_local bool g_inside_parallel = false;
}

void set_thread_count(int n) {
  if (n < 1) throw config_error("thread count must be >= 1");
  g_threads.store(n);
}

int thread_count() { return g_threads.load(); }

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
  int n = end - begin;
  if (n <= 0) return;
  int workers = std::min(thread_count(), n);
  if (workers <= 1 || g_inside_parallel) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
    int hi =
        begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([lo, hi, &fn] {
      g_inside_parallel = true;
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace tomonet
