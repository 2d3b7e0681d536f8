#include "cmms/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cmms {

int thread_cap() {
  if (const char* env = std::getenv("CONFORMAL_MMS_THREADS")) {
    char* end = nullptr;
    long k = std::strtol(env, &end, 10);
    if (end != env && k >= 1) return static_cast<int>(k);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& body) {
  if (n <= 0) return;
  int workers = thread_cap();
  if (workers > n) workers = n;
  if (workers <= 1 || n < 4) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cmms
