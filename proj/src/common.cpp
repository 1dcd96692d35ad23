#include "pccmh/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace pccmh {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = hardware concurrency
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::ptrdiff_t n,
                  const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& fn) {
  if (n <= 0) return;
  const std::ptrdiff_t workers =
      std::min<std::ptrdiff_t>(max_threads(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    const std::ptrdiff_t begin = w * chunk;
    const std::ptrdiff_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pccmh
