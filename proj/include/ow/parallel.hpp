#pragma once
// Fixed-size blocks of independent runs executed on a thread pool. Results
// come back in block order, so reductions are identical for any thread count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ow {

inline constexpr std::uint64_t kRunBlock = 1024;

template <class Acc, class Fn>
std::vector<Acc> run_blocks(std::uint64_t runs, unsigned threads, Fn fn, std::uint64_t block = kRunBlock) {
  const std::uint64_t blocks = (runs + block - 1) / block;
  std::vector<Acc> out(blocks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::uint64_t b; (b = next.fetch_add(1)) < blocks;) {
      try {
        out[b] = fn(b * block, std::min(runs, (b + 1) * block));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    }
  };

  const auto n = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(blocks, 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace ow
