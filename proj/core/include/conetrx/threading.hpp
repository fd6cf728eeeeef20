#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace conetrx {

/// Process-wide compute settings. Determinism mode forces single-threaded,
/// fixed-order execution everywhere; otherwise kernels may split work across
/// batch members. Both can be overridden by environment variables
/// (CONETRX_DETERMINISTIC, CONETRX_THREADS).
struct Compute {
  static bool& determinism() {
    static bool v = [] {
      const char* e = std::getenv("CONETRX_DETERMINISTIC");
      return e != nullptr && e[0] != '0';
    }();
    return v;
  }

  static int& threads() {
    static int v = [] {
      if (const char* e = std::getenv("CONETRX_THREADS")) {
        int n = std::atoi(e);
        if (n >= 1) return n;
      }
      unsigned hw = std::thread::hardware_concurrency();
      return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return v;
  }

  static int effective_threads() { return determinism() ? 1 : threads(); }
};

/// Runs fn(chunk_begin, chunk_end, chunk_index) over [0, n) split into
/// fixed contiguous chunks. Chunking depends only on the thread setting,
/// so per-chunk partial results can be reduced in chunk order for
/// reproducible sums.
inline void parallel_chunks(int64_t n, int nthreads,
                            const std::function<void(int64_t, int64_t, int)>& fn) {
  if (n <= 0) return;
  int chunks = nthreads;
  if (chunks > n) chunks = static_cast<int>(n);
  if (chunks <= 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(chunks));
  int64_t per = (n + chunks - 1) / chunks;
  for (int c = 0; c < chunks; ++c) {
    int64_t b = c * per;
    int64_t e = std::min<int64_t>(n, b + per);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, c] { fn(b, e, c); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace conetrx
