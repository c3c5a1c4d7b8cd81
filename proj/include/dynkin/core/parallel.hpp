#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dynkin {

/// Runs `work(begin, end)` over fixed-size blocks of [0, count) on up to
/// `threads` workers and folds the block results with `merge` in block order.
/// Block boundaries depend only on `count` and `block`, so the folded result
/// is identical for every thread count.
template <class Acc, class Work, class Merge>
Acc parallel_blocks(std::size_t count, std::size_t block, Work&& work, Merge&& merge,
                    unsigned threads = 0) {
  if (block == 0) block = 1;
  const std::size_t nblocks = (count + block - 1) / block;
  std::vector<Acc> partial(nblocks);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(nblocks, 1)));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run_range = [&](std::size_t first_block, std::size_t stride) {
    for (std::size_t b = first_block; b < nblocks; b += stride) {
      try {
        const std::size_t lo = b * block;
        const std::size_t hi = std::min(count, lo + block);
        partial[b] = work(lo, hi);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run_range, t, threads);
  }
  if (failure) std::rethrow_exception(failure);
  Acc total{};
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace dynkin
