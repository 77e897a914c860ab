#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace evfuse::detail {

// Splits [0, n) into contiguous chunks, one per worker, and runs
// body(begin, end) on each. Runs inline below min_items.
template <typename Body>
void ParallelRange(std::size_t n, int threads, Body body, std::size_t min_items = 4096) {
  const std::size_t t = static_cast<std::size_t>(std::max(1, threads));
  if (t == 1 || n < min_items) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + t - 1) / t;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < t; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    workers.emplace_back([=] { body(begin, end); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace evfuse::detail
